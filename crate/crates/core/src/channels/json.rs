//! Wire format for channels: `{"in_dim", "out_dim", "repr": "choi" | "kraus", "data"}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::channel::{KrausSet, QuantumChannel};
use super::{ChannelError, Result};
use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Choi,
    Kraus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub in_dim: usize,
    pub out_dim: usize,
    pub repr: Repr,
    pub data: Value,
}

fn format_err(e: impl std::fmt::Display) -> ChannelError {
    ChannelError::Format(e.to_string())
}

impl ChannelJson {
    pub fn from_choi(ch: &QuantumChannel) -> Self {
        Self {
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            repr: Repr::Choi,
            data: serde_json::to_value(ch.choi()).expect("matrices serialize"),
        }
    }

    pub fn from_kraus(ks: &KrausSet) -> Self {
        Self {
            in_dim: ks.in_dim(),
            out_dim: ks.out_dim(),
            repr: Repr::Kraus,
            data: serde_json::to_value(ks.operators()).expect("matrices serialize"),
        }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        match self.repr {
            Repr::Choi => {
                let c: ComplexMatrix = serde_json::from_value(self.data.clone()).map_err(format_err)?;
                QuantumChannel::from_choi(self.in_dim, self.out_dim, c)
            }
            Repr::Kraus => {
                let ks = self.to_kraus()?;
                QuantumChannel::from_kraus(&ks)
            }
        }
    }

    /// Kraus operators as stored; only meaningful for `repr = kraus`.
    pub fn to_kraus(&self) -> Result<KrausSet> {
        if self.repr != Repr::Kraus {
            return Err(ChannelError::Format("channel is stored as a Choi matrix".into()));
        }
        let ops: Vec<ComplexMatrix> = serde_json::from_value(self.data.clone()).map_err(format_err)?;
        let ks = KrausSet::new(ops)?;
        if (ks.in_dim(), ks.out_dim()) != (self.in_dim, self.out_dim) {
            return Err(ChannelError::DimensionMismatch(format!(
                "Kraus operators are {}x{} but the channel is {} -> {}",
                ks.out_dim(),
                ks.in_dim(),
                self.in_dim,
                self.out_dim
            )));
        }
        Ok(ks)
    }
}

pub fn parse_channel(text: &str) -> Result<QuantumChannel> {
    let j: ChannelJson = serde_json::from_str(text).map_err(format_err)?;
    j.to_channel()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_cptp_kraus, rng_from_seed};

    #[test]
    fn choi_roundtrip() {
        let ch = QuantumChannel::transpose_map(2);
        let s = serde_json::to_string(&ChannelJson::from_choi(&ch)).unwrap();
        assert!(s.contains("\"repr\":\"choi\""));
        assert_eq!(parse_channel(&s).unwrap(), ch);
    }

    #[test]
    fn kraus_roundtrip() {
        let mut rng = rng_from_seed(110);
        let ks = KrausSet::new(random_cptp_kraus(2, 3, 2, &mut rng)).unwrap();
        let j = ChannelJson::from_kraus(&ks);
        let back: ChannelJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.to_kraus().unwrap(), ks);
        assert!(back.to_channel().unwrap().choi().approx_eq(QuantumChannel::from_kraus(&ks).unwrap().choi(), 0.0));
    }

    #[test]
    fn rejects_bad_dims() {
        let ch = QuantumChannel::identity(2);
        let mut j = ChannelJson::from_choi(&ch);
        j.in_dim = 3;
        assert!(j.to_channel().is_err());
        assert!(parse_channel("{\"in_dim\":1}").is_err());
    }
}
