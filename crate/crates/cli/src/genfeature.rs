use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use texsvm::dataview::Example;
use texsvm::descriptors::{extract_batch, ExtractConfig, FeatureLayout};
use texsvm::featfile::FeatureSet;
use texsvm::raster::RasterImage;

const USAGE: &str = "\
usage: texsvm genfeature -o OUT.feat [-l LABEL] (-i IMAGE [-x LEFT -y TOP -w WIDTH -h HEIGHT])...
       texsvm genfeature -o OUT.feat -D DIR

  -i IMAGE   image to describe (PNG or JPEG); may be repeated
  -x -y      top-left corner of a crop of the preceding image
  -w -h      width and height of that crop
  -l LABEL   class label written for every -i image (default 0)
  -D DIR     labeled tree: DIR/<class number>/<image>, one row per image
  -o OUT     feature file to write
  -?, --help print this text";

#[derive(Debug, Default, Clone, Copy)]
struct Crop {
    left: Option<usize>,
    top: Option<usize>,
    width: Option<usize>,
    height: Option<usize>,
}

impl Crop {
    fn is_set(&self) -> bool {
        self.left.is_some() || self.top.is_some() || self.width.is_some() || self.height.is_some()
    }
}

#[derive(Debug)]
struct Source {
    path: PathBuf,
    label: i64,
    crop: Crop,
}

#[derive(Debug, Default)]
struct Request {
    images: Vec<(PathBuf, Crop)>,
    label: i64,
    dir: Option<PathBuf>,
    output: Option<PathBuf>,
}

fn last_crop<'a>(req: &'a mut Request, flag: &str) -> Result<&'a mut Crop> {
    match req.images.last_mut() {
        Some((_, crop)) => Ok(crop),
        None => bail!("{flag} must follow an -i IMAGE"),
    }
}

fn parse(args: &[String]) -> Result<Option<Request>> {
    let mut req = Request::default();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        if flag == "-?" || flag == "--help" {
            return Ok(None);
        }
        let mut value = || it.next().with_context(|| format!("{flag} needs a value"));
        let number = |v: &String| -> Result<usize> {
            v.parse().with_context(|| format!("{flag} expects a non-negative integer, got {v:?}"))
        };
        match flag.as_str() {
            "-i" => req.images.push((PathBuf::from(value()?), Crop::default())),
            "-x" => last_crop(&mut req, flag)?.left = Some(number(value()?)?),
            "-y" => last_crop(&mut req, flag)?.top = Some(number(value()?)?),
            "-w" => last_crop(&mut req, flag)?.width = Some(number(value()?)?),
            "-h" => last_crop(&mut req, flag)?.height = Some(number(value()?)?),
            "-l" => {
                let v = value()?;
                req.label = v.parse().with_context(|| format!("-l expects an integer label, got {v:?}"))?;
            }
            "-D" => req.dir = Some(PathBuf::from(value()?)),
            "-o" => req.output = Some(PathBuf::from(value()?)),
            other => bail!("unexpected argument {other:?}\n\n{USAGE}"),
        }
    }
    Ok(Some(req))
}

/// Lists `dir/<label>/<file>` entries sorted by label, then file name.
pub(crate) fn labeled_tree(dir: &Path) -> Result<Vec<(i64, PathBuf)>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let name = entry.file_name();
        let Some(label) = name.to_str().and_then(|s| s.parse::<i64>().ok()) else {
            eprintln!("warning: skipping {} (directory name is not a class number)", entry.path().display());
            continue;
        };
        for file in std::fs::read_dir(entry.path())? {
            let file = file?;
            if file.file_type()?.is_file() {
                out.push((label, file.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn load(source: &Source) -> Result<RasterImage> {
    let img = RasterImage::open(&source.path)?;
    let c = source.crop;
    if !c.is_set() {
        return Ok(img);
    }
    let left = c.left.unwrap_or(0);
    let top = c.top.unwrap_or(0);
    let width = c.width.unwrap_or(img.width().saturating_sub(left));
    let height = c.height.unwrap_or(img.height().saturating_sub(top));
    img.crop(left, top, width, height)
        .with_context(|| format!("cropping {}", source.path.display()))
}

pub fn run(args: &[String]) -> Result<ExitCode> {
    let Some(req) = parse(args)? else {
        println!("{USAGE}");
        return Ok(ExitCode::SUCCESS);
    };
    let Some(output) = &req.output else {
        bail!("an output file is required (-o OUT.feat)\n\n{USAGE}");
    };
    let mut sources: Vec<Source> = req
        .images
        .into_iter()
        .map(|(path, crop)| Source {
            path,
            label: req.label,
            crop,
        })
        .collect();
    if let Some(dir) = &req.dir {
        sources.extend(labeled_tree(dir)?.into_iter().map(|(label, path)| Source {
            path,
            label,
            crop: Crop::default(),
        }));
    }
    if sources.is_empty() {
        bail!("no images given (-i IMAGE or -D DIR)\n\n{USAGE}");
    }

    let images = sources
        .iter()
        .map(|s| load(s).with_context(|| format!("loading {}", s.path.display())))
        .collect::<Result<Vec<_>>>()?;
    let cfg = ExtractConfig::default();
    let mut examples = Vec::with_capacity(images.len());
    for (id, (result, source)) in extract_batch(&images, &cfg).into_iter().zip(&sources).enumerate() {
        let fv = result.with_context(|| format!("describing {}", source.path.display()))?;
        examples.push(Example::new(id as u64, source.label, fv.values));
    }
    let layout = FeatureLayout::for_config(&cfg);
    let set = FeatureSet::new(layout.total_len(), layout, examples)?;
    set.write(output)
        .with_context(|| format!("writing {}", output.display()))?;
    eprintln!("wrote {} rows of {} features to {}", set.examples.len(), set.arity, output.display());
    Ok(ExitCode::SUCCESS)
}
