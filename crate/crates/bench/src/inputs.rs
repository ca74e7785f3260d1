//! Image sources: CSV tensors, IDX files (MNIST layout), CIFAR binary
//! batches, or seeded random images.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csv_io::read_tensor_csv;
use crate::error::BenchError;

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;
const CIFAR_RECORD: usize = 1 + 3 * 32 * 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// The first N samples in file order.
    #[default]
    First,
    /// N distinct samples chosen by the seed, kept in file order.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub images: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Keeps `n` samples according to `mode`.
    pub fn select(self, n: usize, mode: SampleMode, seed: u64) -> Result<Dataset, BenchError> {
        if n > self.len() {
            return Err(BenchError::Data(format!(
                "requested {n} samples but the source holds {}",
                self.len()
            )));
        }
        let mut picks: Vec<usize> = match mode {
            SampleMode::First => (0..n).collect(),
            SampleMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a3b_1e5d);
                index::sample(&mut rng, self.len(), n).into_vec()
            }
        };
        picks.sort_unstable();
        Ok(Dataset {
            images: picks.iter().map(|i| self.images[*i].clone()).collect(),
            labels: self.labels.map(|l| picks.iter().map(|i| l[*i]).collect()),
        })
    }
}

/// `n` images with entries uniform in [0, 1).
pub fn random_images(seed: u64, numel: usize, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset {
        images: (0..n)
            .map(|_| (0..numel).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect(),
        labels: None,
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
}

/// Splits an IDX u8 file into per-item byte rows; the flag is true for images.
fn parse_idx<'a>(path: &Path, bytes: &'a [u8]) -> Result<(Vec<&'a [u8]>, bool), BenchError> {
    let bad = |msg: &str| BenchError::io(path, msg);
    let magic = read_u32(bytes, 0).ok_or_else(|| bad("truncated IDX header"))?;
    let dims = match magic {
        IDX_IMAGES => 3,
        IDX_LABELS => 1,
        _ => return Err(bad("not an IDX u8 image or label file")),
    };
    let shape: Vec<usize> = (0..dims)
        .map(|d| read_u32(bytes, 4 + 4 * d).map(|v| v as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| bad("truncated IDX header"))?;
    let per: usize = shape[1..].iter().product();
    let body = &bytes[4 + 4 * dims..];
    if body.len() != shape[0] * per {
        return Err(bad("IDX payload size does not match its header"));
    }
    Ok((body.chunks(per.max(1)).collect(), magic == IDX_IMAGES))
}

fn parse_cifar(path: &Path, bytes: &[u8], ds: &mut Dataset) -> Result<(), BenchError> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(BenchError::io(
            path,
            "size is not a multiple of the CIFAR record length",
        ));
    }
    let labels = ds.labels.get_or_insert_with(Vec::new);
    for rec in bytes.chunks(CIFAR_RECORD) {
        labels.push(rec[0] as usize);
        ds.images
            .push(rec[1..].iter().map(|b| *b as f64 / 255.0).collect());
    }
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, BenchError> {
    fs::read(path).map_err(|e| BenchError::io(path, e))
}

fn sorted_files(dir: &Path, keep: impl Fn(&str) -> bool) -> Result<Vec<PathBuf>, BenchError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| BenchError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().and_then(|n| n.to_str()).is_some_and(&keep))
        .collect();
    out.sort();
    Ok(out)
}

fn load_csv_image(path: &Path, numel: usize) -> Result<Vec<Vec<f64>>, BenchError> {
    let (shape, values, _) = read_tensor_csv(path)?;
    // one image per file, or a leading batch dimension
    if values.len() == numel {
        Ok(vec![values])
    } else if shape.len() > 1 && shape[1..].iter().product::<usize>() == numel {
        Ok(values.chunks(numel).map(<[f64]>::to_vec).collect())
    } else {
        Err(BenchError::ShapeMismatch {
            path: path.to_path_buf(),
            expected: vec![numel],
            got: shape,
        })
    }
}

/// Loads every image at `path`. Files may be CSV tensors, IDX image files or
/// CIFAR `.bin` batches (which carry their own labels). A directory is read
/// as its `.csv` files, else its IDX image file with a matching label file,
/// else its `.bin` batches.
pub fn load_images(path: &Path, numel: usize) -> Result<Dataset, BenchError> {
    let mut ds = Dataset {
        images: Vec::new(),
        labels: None,
    };
    let files = if path.is_dir() {
        let csv = sorted_files(path, |n| n.ends_with(".csv"))?;
        let idx = sorted_files(path, |n| n.contains("images") && n.contains("idx3"))?;
        if !csv.is_empty() {
            csv
        } else if let Some(images) = idx.first() {
            let labels = sorted_files(path, |n| n.contains("labels") && n.contains("idx1"))?;
            let images = images.clone();
            let mut ds = load_images(&images, numel)?;
            if let Some(l) = labels.first() {
                ds.labels = Some(load_labels(l)?);
            }
            return check_dataset(path, ds, numel);
        } else {
            sorted_files(path, |n| n.ends_with(".bin"))?
        }
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(BenchError::io(path, "no image files found"));
    }
    for file in files {
        let name = file.to_string_lossy().to_string();
        if name.ends_with(".csv") {
            ds.images.extend(load_csv_image(&file, numel)?);
        } else if name.ends_with(".bin") {
            parse_cifar(&file, &read_bytes(&file)?, &mut ds)?;
        } else {
            let bytes = read_bytes(&file)?;
            let (rows, images) = parse_idx(&file, &bytes)?;
            if !images {
                return Err(BenchError::io(
                    &file,
                    "expected an IDX image file, found labels",
                ));
            }
            ds.images.extend(
                rows.iter()
                    .map(|r| r.iter().map(|b| *b as f64 / 255.0).collect::<Vec<_>>()),
            );
        }
    }
    check_dataset(path, ds, numel)
}

fn check_dataset(path: &Path, ds: Dataset, numel: usize) -> Result<Dataset, BenchError> {
    if let Some(bad) = ds.images.iter().find(|i| i.len() != numel) {
        return Err(BenchError::ShapeMismatch {
            path: path.to_path_buf(),
            expected: vec![numel],
            got: vec![bad.len()],
        });
    }
    Ok(ds)
}

/// Labels from an IDX label file or a CSV tensor of integer class indices.
pub fn load_labels(path: &Path) -> Result<Vec<usize>, BenchError> {
    let bytes = read_bytes(path)?;
    if read_u32(&bytes, 0) == Some(IDX_LABELS) {
        let (rows, _) = parse_idx(path, &bytes)?;
        return Ok(rows.iter().map(|r| r[0] as usize).collect());
    }
    let (_, values, _) = read_tensor_csv(path)?;
    values
        .iter()
        .map(|v| {
            if *v >= 0.0 && v.fract() == 0.0 {
                Ok(*v as usize)
            } else {
                Err(BenchError::io(
                    path,
                    format!("label {v} is not a class index"),
                ))
            }
        })
        .collect()
}
