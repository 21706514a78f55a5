//! Datasets: synthetic Gaussian blobs, header-free CSV (label first), and
//! the big-endian IDX image/label pair format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng, RngSeed};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Deterministic split into (front, back) by fraction of the front part.
    pub fn split(&self, front_fraction: f64) -> (Dataset, Dataset) {
        let cut = ((self.len() as f64) * front_fraction).round() as usize;
        let cut = cut.min(self.len());
        let front = Dataset {
            inputs: self.inputs[..cut].to_vec(),
            labels: self.labels[..cut].to_vec(),
            n_classes: self.n_classes,
        };
        let back = Dataset {
            inputs: self.inputs[cut..].to_vec(),
            labels: self.labels[cut..].to_vec(),
            n_classes: self.n_classes,
        };
        (front, back)
    }
}

/// Gaussian clusters with unit-separated means: class c centers on the
/// one-hot axis c (wrapping with an offset when classes exceed dims), with
/// isotropic noise of the given spread. Samples interleave classes.
pub fn gen_blobs(
    n_per_class: usize,
    n_classes: usize,
    dim: usize,
    spread: f64,
    seed: RngSeed,
) -> Dataset {
    assert!(dim >= 1 && n_classes >= 1);
    let mut inputs = Vec::with_capacity(n_per_class * n_classes);
    let mut labels = Vec::with_capacity(n_per_class * n_classes);
    let mut rng = Rng::new(derive_seed(seed, 0));
    for i in 0..n_per_class {
        for c in 0..n_classes {
            let mut x = vec![0.0; dim];
            x[c % dim] = 1.0 + (c / dim) as f64;
            for v in x.iter_mut() {
                *v += spread * rng.normal();
            }
            inputs.push(x);
            labels.push(c);
            let _ = i;
        }
    }
    Dataset {
        inputs,
        labels,
        n_classes,
    }
}

/// Header-free CSV: integer label in the first column, features after.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut offset = 0u64;
    for line in text.lines() {
        let line_start = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label_txt = fields.next().unwrap_or("").trim();
        let label: usize = label_txt.parse().map_err(|_| Error::Format {
            offset: line_start,
            reason: format!("bad label {label_txt:?}"),
        })?;
        let mut row = Vec::new();
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::Format {
                offset: line_start,
                reason: format!("bad feature {f:?}"),
            })?;
            row.push(v);
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::Format {
                    offset: line_start,
                    reason: format!("row has {} features, expected {w}", row.len()),
                });
            }
        } else {
            width = Some(row.len());
        }
        labels.push(label);
        inputs.push(row);
    }
    if inputs.is_empty() {
        return Err(Error::Format {
            offset: 0,
            reason: "empty dataset".into(),
        });
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    Ok(Dataset {
        inputs,
        labels,
        n_classes,
    })
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: "truncated file".into(),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Big-endian IDX pair: images with magic 0x00000803 and u8 pixels scaled
/// to [0, 1], labels with magic 0x00000801.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img_bytes = fs::read(images_path)?;
    let magic = read_be_u32(&img_bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let count = read_be_u32(&img_bytes, 4)? as usize;
    let rows = read_be_u32(&img_bytes, 8)? as usize;
    let cols = read_be_u32(&img_bytes, 12)? as usize;
    let pixel_count = count * rows * cols;
    if img_bytes.len() != 16 + pixel_count {
        return Err(Error::Format {
            offset: img_bytes.len() as u64,
            reason: format!("expected {} pixel bytes", pixel_count),
        });
    }

    let lbl_bytes = fs::read(labels_path)?;
    let magic = read_be_u32(&lbl_bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let lbl_count = read_be_u32(&lbl_bytes, 4)? as usize;
    if lbl_count != count {
        return Err(Error::Format {
            offset: 4,
            reason: format!("{count} images but {lbl_count} labels"),
        });
    }
    if lbl_bytes.len() != 8 + lbl_count {
        return Err(Error::Format {
            offset: lbl_bytes.len() as u64,
            reason: "truncated label file".into(),
        });
    }

    let dim = rows * cols;
    let inputs: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            img_bytes[16 + i * dim..16 + (i + 1) * dim]
                .iter()
                .map(|&b| b as f64 / 255.0)
                .collect()
        })
        .collect();
    let labels: Vec<usize> = lbl_bytes[8..].iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().max().map_or(1, |m| m + 1);
    Ok(Dataset {
        inputs,
        labels,
        n_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn blobs_counts_and_labels() {
        let d = gen_blobs(10, 3, 2, 0.05, RngSeed::new(80));
        assert_eq!(d.len(), 30);
        assert_eq!(d.n_classes, 3);
        let mut seen: Vec<usize> = d.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn blobs_means_are_separated() {
        let d = gen_blobs(200, 3, 4, 0.05, RngSeed::new(81));
        let mut means = vec![vec![0.0; 4]; 3];
        let mut counts = vec![0usize; 3];
        for (x, &y) in d.inputs.iter().zip(&d.labels) {
            for (m, v) in means[y].iter_mut().zip(x) {
                *m += v;
            }
            counts[y] += 1;
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            for v in m.iter_mut() {
                *v /= c as f64;
            }
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let dist: f64 = means[a]
                    .iter()
                    .zip(&means[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist >= 1.0, "means {a} and {b} only {dist} apart");
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir();
        let path = dir.join("shadownet_test_data.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "1,0.5,0.25").unwrap();
        writeln!(f, "0,1.5,2.5").unwrap();
        drop(f);
        let d = load_csv(&path).unwrap();
        assert_eq!(d.labels, vec![1, 0]);
        assert_eq!(d.inputs[0], vec![0.5, 0.25]);
        assert_eq!(d.n_classes, 2);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn csv_reports_offsets() {
        let dir = std::env::temp_dir();
        let path = dir.join("shadownet_bad_data.csv");
        std::fs::write(&path, "1,0.5\nx,2.0\n").unwrap();
        let err = load_csv(&path).unwrap_err();
        match err {
            Error::Format { offset, .. } => assert_eq!(offset, 6),
            other => panic!("unexpected error {other:?}"),
        }
        std::fs::remove_file(&path).ok();
    }

    fn write_idx_pair(n: usize, rows: usize, cols: usize, magic: u32) -> (std::path::PathBuf, std::path::PathBuf) {
        let dir = std::env::temp_dir();
        let img = dir.join(format!("shadownet_idx_{magic:x}_{n}.images"));
        let lbl = dir.join(format!("shadownet_idx_{magic:x}_{n}.labels"));
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&magic.to_be_bytes());
        bytes.extend_from_slice(&(n as u32).to_be_bytes());
        bytes.extend_from_slice(&(rows as u32).to_be_bytes());
        bytes.extend_from_slice(&(cols as u32).to_be_bytes());
        bytes.extend(std::iter::repeat(128u8).take(n * rows * cols));
        std::fs::write(&img, bytes).unwrap();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(n as u32).to_be_bytes());
        bytes.extend((0..n).map(|i| (i % 3) as u8));
        std::fs::write(&lbl, bytes).unwrap();
        (img, lbl)
    }

    #[test]
    fn idx_accepts_standard_magic() {
        let (img, lbl) = write_idx_pair(6, 2, 3, IDX_IMAGES_MAGIC);
        let d = load_idx(&img, &lbl).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d.inputs[0].len(), 6);
        assert!((d.inputs[0][0] - 128.0 / 255.0).abs() < 1e-12);
        assert_eq!(d.n_classes, 3);
        std::fs::remove_file(&img).ok();
        std::fs::remove_file(&lbl).ok();
    }

    #[test]
    fn idx_rejects_wrong_magic() {
        let (img, lbl) = write_idx_pair(2, 2, 2, 0x0000_0804);
        let err = load_idx(&img, &lbl).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }));
        std::fs::remove_file(&img).ok();
        std::fs::remove_file(&lbl).ok();
    }
}
