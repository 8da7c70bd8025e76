//! Binary embedding checkpoints and JSON-lines training history.
//!
//! Layout (little endian):
//!
//! ```text
//! magic  b"SGCF"     4 bytes
//! version u32        currently 1
//! n       u64        node count
//! d       u64        embedding dimension
//! users   u64        number of users
//! order   u64        polynomial order K
//! a, b    f64, f64   Jacobi exponents
//! alpha   f64        band-pass offset
//! basis   u8         0 jacobi, 1 chebyshev, 2 legendre, 3 monomial, 4 bernstein
//! discount f64
//! E0      n * d f32  row major
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::polybasis::{BasisKind, FilterParams};
use crate::propagation::EmbeddingTable;
use crate::training::EpochRecord;

const MAGIC: &[u8; 4] = b"SGCF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 4 + 8 * 3 + 1 + 8;

fn basis_code(b: BasisKind) -> u8 {
    match b {
        BasisKind::Jacobi => 0,
        BasisKind::Chebyshev => 1,
        BasisKind::Legendre => 2,
        BasisKind::Monomial => 3,
        BasisKind::Bernstein => 4,
    }
}

fn basis_from_code(c: u8) -> Result<BasisKind> {
    Ok(match c {
        0 => BasisKind::Jacobi,
        1 => BasisKind::Chebyshev,
        2 => BasisKind::Legendre,
        3 => BasisKind::Monomial,
        4 => BasisKind::Bernstein,
        other => return Err(Error::Checkpoint(format!("unknown basis code {other}"))),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub embeddings: EmbeddingTable,
    /// Filter the embeddings were trained with; order weights are always uniform.
    pub filter: FilterParams,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let e = &self.embeddings;
        let f = &self.filter;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * e.num_nodes() * e.dim());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [e.num_nodes(), e.dim(), e.num_users(), f.order] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for v in [f.a, f.b, f.alpha] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(basis_code(f.basis));
        out.extend_from_slice(&f.discount.to_le_bytes());
        for v in e.weights().iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Checkpoint("missing SGCF header".into()));
        }
        let mut pos = 4;
        let mut take = |len: usize| {
            let s = &bytes[pos..pos + len];
            pos += len;
            s
        };
        let version = u32::from_le_bytes(take(4).try_into().unwrap());
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut u = || u64::from_le_bytes(take(8).try_into().unwrap()) as usize;
        let (n, d, users, order) = (u(), u(), u(), u());
        let mut f = || f64::from_le_bytes(take(8).try_into().unwrap());
        let (a, b, alpha) = (f(), f(), f());
        let basis = basis_from_code(take(1)[0])?;
        let discount = f64::from_le_bytes(take(8).try_into().unwrap());
        let body = &bytes[HEADER_LEN..];
        let expected = n
            .checked_mul(d)
            .and_then(|x| x.checked_mul(4))
            .ok_or_else(|| Error::Checkpoint("size overflow".into()))?;
        if body.len() != expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} payload bytes for {n}x{d}, found {}",
                body.len()
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let weights = Array2::from_shape_vec((n, d), values).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let filter = FilterParams {
            basis,
            order,
            a,
            b,
            alpha,
            order_weights: None,
            discount,
        };
        filter.validate()?;
        Ok(Self {
            embeddings: EmbeddingTable::new(weights, users)?,
            filter,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Writes one JSON object per epoch.
pub fn write_history(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for rec in history {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history(path: impl AsRef<Path>) -> Result<Vec<EpochRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(n in 1usize..6, d in 1usize..5, order in 0usize..5, a in -0.9f64..2.0, alpha in -1.0f64..1.0,
                     seed in any::<u64>()) {
            let mut rng = crate::rng::stream(seed, crate::rng::Stream::Init);
            let table = EmbeddingTable::xavier_uniform(n, d, n / 2, &mut rng);
            // payload is f32, so compare against the f32-rounded table
            let rounded = EmbeddingTable::new(table.weights().mapv(|v| v as f32 as f64), n / 2).unwrap();
            let ck = Checkpoint { embeddings: table, filter: FilterParams::jacobi(order, a, 0.5).with_alpha(alpha) };
            let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
            prop_assert_eq!(back.embeddings, rounded);
            prop_assert_eq!(back.filter, ck.filter);
        }
    }

    #[test]
    fn header_layout() {
        let table = EmbeddingTable::new(Array2::from_elem((3, 2), 0.5), 1).unwrap();
        let ck = Checkpoint {
            embeddings: table,
            filter: FilterParams::default(),
        };
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..4], b"SGCF");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 2 * 4);
        assert_eq!(
            f32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()),
            0.5
        );
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let table = EmbeddingTable::new(Array2::zeros((2, 2)), 1).unwrap();
        let bytes = Checkpoint {
            embeddings: table,
            filter: FilterParams::default(),
        }
        .to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Checkpoint::from_bytes(b"nope").is_err());
    }

    #[test]
    fn history_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.jsonl");
        let hist = vec![
            EpochRecord {
                epoch: 1,
                loss: 0.69,
                valid_recall: Some(0.1),
                valid_ndcg: Some(0.05),
                skipped_triples: 0,
            },
            EpochRecord {
                epoch: 2,
                loss: 0.5,
                valid_recall: None,
                valid_ndcg: None,
                skipped_triples: 3,
            },
        ];
        write_history(&hist, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        assert_eq!(read_history(&path).unwrap(), hist);
    }
}
