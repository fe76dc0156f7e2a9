//! Toy dataset generators and CSV ingestion.

mod csv_io;
mod generators;

pub use csv_io::{format_f64, load_csv, write_csv, CsvOptions};
pub use generators::{
    gen_repeat_points, gen_smile_face, gen_swiss_roll, gen_three_gauss, smile_face_counts,
    swiss_roll_parameter, SMILE_EYES, SMILE_EYE_STD, SMILE_MOUTH_ALPHA, SMILE_MOUTH_RADIUS,
    THREE_GAUSS_MEAN_NORM, THREE_GAUSS_STDS,
};

use sha2::{Digest, Sha256};

use crate::numerics::Matrix;
use crate::Error;

/// Sample matrix with optional class labels in `[0, C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Option<Vec<usize>>) -> Result<Self, Error> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "dataset must have at least one row and column, got {}x{}",
                features.rows(),
                features.cols()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::Shape(format!(
                    "{} labels for {} rows",
                    l.len(),
                    features.rows()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Number of classes `C = max label + 1`.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// `rows x cols` plus a SHA-256 over feature bits and labels.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        h.update((self.features.rows() as u64).to_le_bytes());
        h.update((self.features.cols() as u64).to_le_bytes());
        for v in self.features.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        if let Some(labels) = &self.labels {
            h.update(b"labels");
            for &l in labels {
                h.update((l as u64).to_le_bytes());
            }
        }
        let digest = h.finalize();
        Fingerprint {
            rows: self.features.rows(),
            cols: self.features.cols(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    pub rows: usize,
    pub cols: usize,
    pub sha256: String,
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}:{}", self.rows, self.cols, self.sha256)
    }
}
