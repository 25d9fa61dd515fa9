use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use crate::genfeature::labeled_tree;

#[derive(Debug, Default, Clone, Copy)]
struct Extent {
    min: u32,
    max: u32,
    sum: u64,
}

impl Extent {
    fn add(&mut self, v: u32, first: bool) {
        if first {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
        self.sum += u64::from(v);
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct ClassStats {
    count: usize,
    width: Extent,
    height: Extent,
}

impl ClassStats {
    fn add(&mut self, w: u32, h: u32) {
        let first = self.count == 0;
        self.width.add(w, first);
        self.height.add(h, first);
        self.count += 1;
    }

    fn merge(&mut self, other: &ClassStats) {
        if other.count == 0 {
            return;
        }
        let first = self.count == 0;
        for (mine, theirs) in [(&mut self.width, other.width), (&mut self.height, other.height)] {
            mine.min = if first { theirs.min } else { mine.min.min(theirs.min) };
            mine.max = if first { theirs.max } else { mine.max.max(theirs.max) };
            mine.sum += theirs.sum;
        }
        self.count += other.count;
    }

    fn line(&self, name: &str) -> String {
        if self.count == 0 {
            return format!("{name}\t0\t-\t-");
        }
        let mean = |e: Extent| e.sum as f64 / self.count as f64;
        format!(
            "{name}\t{}\t{}/{:.2}/{}\t{}/{:.2}/{}",
            self.count,
            self.width.min,
            mean(self.width),
            self.width.max,
            self.height.min,
            mean(self.height),
            self.height.max
        )
    }
}

pub fn run(class: i64, dir: &Path) -> Result<ExitCode> {
    if class < -1 {
        bail!("class must be -1 (all) or a class number, got {class}");
    }
    let mut per_class: BTreeMap<i64, ClassStats> = BTreeMap::new();
    for (label, path) in labeled_tree(dir)? {
        if class != -1 && label != class {
            continue;
        }
        let (w, h) = image::image_dimensions(&path).with_context(|| format!("reading {}", path.display()))?;
        per_class.entry(label).or_default().add(w, h);
    }
    println!("class\tcount\twidth min/mean/max\theight min/mean/max");
    if class == -1 {
        let mut total = ClassStats::default();
        for (label, stats) in &per_class {
            println!("{}", stats.line(&label.to_string()));
            total.merge(stats);
        }
        println!("{}", total.line("all"));
    } else {
        let stats = per_class.get(&class).copied().unwrap_or_default();
        println!("{}", stats.line(&class.to_string()));
    }
    Ok(ExitCode::SUCCESS)
}
