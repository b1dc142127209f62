//! Binary model files: magic `DTLM`, a little-endian header, then each
//! weight tensor with an explicit dimension header.

use super::{LayerParams, LstmError, LstmModel};
use crate::hyper::HyperParams;

const MAGIC: &[u8; 4] = b"DTLM";
const VERSION: u16 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], LstmError> {
        if self.pos + n > self.bytes.len() {
            return Err(LstmError::Deserialize(format!(
                "truncated while reading {what}"
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16, LstmError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, LstmError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, LstmError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, LstmError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    /// Reads one tensor and checks its dimension header against `dims`.
    fn tensor(&mut self, dims: &[u32], what: &str) -> Result<Vec<f64>, LstmError> {
        let ndim = self.u32(what)?;
        if ndim as usize != dims.len() {
            return Err(LstmError::Deserialize(format!(
                "{what}: expected {} dimensions, found {ndim}",
                dims.len()
            )));
        }
        let mut len = 1usize;
        for &expected in dims {
            let found = self.u32(what)?;
            if found != expected {
                return Err(LstmError::Deserialize(format!(
                    "{what}: expected dimension {expected}, found {found}"
                )));
            }
            len *= expected as usize;
        }
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(self.f64(what)?);
        }
        Ok(values)
    }
}

fn write_tensor(out: &mut Vec<u8>, dims: &[u32], values: &[f64]) {
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

impl LstmModel {
    /// Encodes the model into its binary file format.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.hyper.learning_rate().to_le_bytes());
        out.extend_from_slice(&self.hyper.layers().to_le_bytes());
        out.extend_from_slice(&self.hyper.units().to_le_bytes());
        out.extend_from_slice(&self.hyper.epochs().to_le_bytes());
        out.extend_from_slice(&(self.lookback as u32).to_le_bytes());
        out.extend_from_slice(&self.reference_speed.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.train_fingerprint);
        for layer in &self.layers {
            let rows = 4 * layer.units as u32;
            write_tensor(&mut out, &[rows, layer.input_dim as u32], &layer.w_input);
            write_tensor(&mut out, &[rows, layer.units as u32], &layer.w_recurrent);
            write_tensor(&mut out, &[rows], &layer.bias);
        }
        write_tensor(&mut out, &[self.head_weight.len() as u32], &self.head_weight);
        write_tensor(&mut out, &[1], &[self.head_bias]);
        out
    }

    /// Decodes a model file, validating magic, version, and every tensor
    /// shape against the recorded setting.
    pub fn deserialize(bytes: &[u8]) -> Result<Self, LstmError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(LstmError::Deserialize(format!(
                "bad magic {:02x?}",
                magic
            )));
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(LstmError::Deserialize(format!(
                "unsupported version {version}"
            )));
        }
        let learning_rate = r.f64("learning rate")?;
        let layers = r.u32("layer count")?;
        let units = r.u32("unit count")?;
        let epochs = r.u32("epochs")?;
        let hyper = HyperParams::new(learning_rate, layers, units, epochs)
            .map_err(|e| LstmError::Deserialize(e.to_string()))?;
        let lookback = r.u32("lookback")? as usize;
        if lookback == 0 {
            return Err(LstmError::Deserialize("lookback is zero".into()));
        }
        let reference_speed = r.f64("reference speed")?;
        if !(reference_speed.is_finite() && reference_speed > 0.0) {
            return Err(LstmError::Deserialize(format!(
                "bad reference speed {reference_speed}"
            )));
        }
        let seed = r.u64("seed")?;
        let train_fingerprint: [u8; 32] = r.take(32, "fingerprint")?.try_into().unwrap();
        let u = units as usize;
        let rows = 4 * units;
        let mut layer_params = Vec::with_capacity(layers as usize);
        for l in 0..layers {
            let input_dim = if l == 0 { 1 } else { units };
            let w_input = r.tensor(&[rows, input_dim], "input weights")?;
            let w_recurrent = r.tensor(&[rows, units], "recurrent weights")?;
            let bias = r.tensor(&[rows], "bias")?;
            layer_params.push(LayerParams {
                input_dim: input_dim as usize,
                units: u,
                w_input,
                w_recurrent,
                bias,
            });
        }
        let head_weight = r.tensor(&[units], "head weights")?;
        let head_bias = r.tensor(&[1], "head bias")?[0];
        if r.pos != bytes.len() {
            return Err(LstmError::Deserialize(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        for v in layer_params
            .iter()
            .flat_map(|l| l.w_input.iter().chain(&l.w_recurrent).chain(&l.bias))
            .chain(&head_weight)
            .chain(std::iter::once(&head_bias))
        {
            if !v.is_finite() {
                return Err(LstmError::Deserialize("non-finite weight".into()));
            }
        }
        Ok(LstmModel {
            hyper,
            lookback,
            reference_speed,
            seed,
            train_fingerprint,
            layers: layer_params,
            head_weight,
            head_bias,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::tests::series_from;
    use crate::lstm::{train, TrainConfig};

    fn trained() -> LstmModel {
        let series = series_from("io", (0..80).map(|i| 50.0 + (i % 9) as f64).collect());
        train(
            &series,
            HyperParams::new(0.03, 2, 4, 100).unwrap(),
            &TrainConfig {
                lookback: 6,
                ..TrainConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trips_bit_for_bit() {
        let model = trained();
        let bytes = model.serialize();
        let restored = LstmModel::deserialize(&bytes).unwrap();
        assert_eq!(restored, model);
        assert_eq!(restored.serialize(), bytes);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = trained().serialize();
        bytes[0] = b'X';
        assert!(matches!(
            LstmModel::deserialize(&bytes),
            Err(LstmError::Deserialize(_))
        ));
    }

    #[test]
    fn rejects_truncation() {
        let bytes = trained().serialize();
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            LstmModel::deserialize(cut),
            Err(LstmError::Deserialize(_))
        ));
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = trained().serialize();
        bytes.push(0);
        assert!(matches!(
            LstmModel::deserialize(&bytes),
            Err(LstmError::Deserialize(_))
        ));
    }

    #[test]
    fn rejects_tampered_dimension_headers() {
        let model = trained();
        let bytes = model.serialize();
        // The first tensor header sits right after the fixed-size header.
        let header = 4 + 2 + 8 + 4 + 4 + 4 + 4 + 8 + 8 + 32;
        let mut tampered = bytes.clone();
        tampered[header + 4] ^= 0x01;
        assert!(matches!(
            LstmModel::deserialize(&tampered),
            Err(LstmError::Deserialize(_))
        ));
    }
}
