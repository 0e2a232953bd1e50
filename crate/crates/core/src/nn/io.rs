//! `SPNN` network files.
//!
//! Layout (little-endian): magic `SPNN`, u32 version, then the network spec as u32
//! words `kind, M, Q` followed by the `drp`, `drc`, `fc` and `distance` size
//! lists, each as a count and its values. Then f32 buffers in declaration
//! order: parameters, batchnorm running mean and variance, Adam first and
//! second moments. The file ends with the u64 step counter.

use std::path::Path;

use super::{Layout, NetworkKind, NetworkSpec, NetworkState};
use crate::error::{Error, Result};
use crate::imgio::{check_magic, check_version, FORMAT_VERSION};

const MAGIC: &[u8; 4] = b"SPNN";

fn kind_code(kind: NetworkKind) -> u32 {
    match kind {
        NetworkKind::Classification => 0,
        NetworkKind::RegressionDistance => 1,
    }
}

pub fn encode_network(state: &NetworkState) -> Vec<u8> {
    let spec = &state.spec;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let mut words = vec![FORMAT_VERSION, kind_code(spec.kind), spec.m as u32, spec.q as u32];
    for list in [&spec.drp, &spec.drc, &spec.fc, &spec.distance] {
        words.push(list.len() as u32);
        words.extend(list.iter().map(|&s| s as u32));
    }
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let buffers = state
        .params
        .iter()
        .chain([&state.running_mean, &state.running_var])
        .chain(&state.adam_m)
        .chain(&state.adam_v);
    for buf in buffers {
        for &v in buf {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.extend_from_slice(&state.step.to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() < self.pos + n {
            return Err(Error::TruncatedData { expected: self.pos + n, found: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn list(&mut self) -> Result<Vec<usize>> {
        let n = self.u32()? as usize;
        // bound by remaining bytes so a corrupt count cannot allocate wildly
        if n > (self.bytes.len() - self.pos) / 4 {
            return Err(Error::TruncatedData { expected: self.pos + 4 * n, found: self.bytes.len() });
        }
        (0..n).map(|_| self.u32().map(|v| v as usize)).collect()
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(4 * n)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect())
    }
}

pub fn decode_network(bytes: &[u8]) -> Result<NetworkState> {
    check_magic(bytes, MAGIC)?;
    check_version(bytes)?;
    let mut cur = Cursor { bytes, pos: 8 };
    let kind = match cur.u32()? {
        0 => NetworkKind::Classification,
        1 => NetworkKind::RegressionDistance,
        k => return Err(Error::MalformedHeader(format!("unknown network kind {k}"))),
    };
    let m = cur.u32()? as usize;
    let q = cur.u32()? as usize;
    let spec = NetworkSpec {
        kind,
        m,
        q,
        drp: cur.list()?,
        drc: cur.list()?,
        fc: cur.list()?,
        distance: cur.list()?,
    };
    spec.validate()?;
    let layout = Layout::new(&spec);
    let read_group = |cur: &mut Cursor| -> Result<Vec<Vec<f64>>> {
        layout.params.iter().map(|d| cur.f32s(d.len)).collect()
    };
    let params = read_group(&mut cur)?;
    let dim = layout.norm.as_ref().map_or(0, |n| n.dim);
    let running_mean = cur.f32s(dim)?;
    let running_var = cur.f32s(dim)?;
    let adam_m = read_group(&mut cur)?;
    let adam_v = read_group(&mut cur)?;
    let step = u64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
    if cur.pos != bytes.len() {
        return Err(Error::MalformedHeader(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(NetworkState { spec, params, running_mean, running_var, adam_m, adam_v, step })
}

pub fn save_network(path: impl AsRef<Path>, state: &NetworkState) -> Result<()> {
    std::fs::write(path, encode_network(state))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkState> {
    decode_network(&std::fs::read(path)?)
}

/// Loads a network and checks that its spec matches `expected`.
pub fn load_network_expecting(path: impl AsRef<Path>, expected: &NetworkSpec) -> Result<NetworkState> {
    let state = load_network(path)?;
    if &state.spec != expected {
        return Err(Error::SpecMismatch(format!("file has {:?}, expected {:?}", state.spec, expected)));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::train::{train_epoch, SampleSet, TrainConfig};
    use crate::nn::{build_classifier, build_regression};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained(spec: &NetworkSpec) -> NetworkState {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = NetworkState::init(spec, &mut rng).unwrap();
        let mut set = SampleSet::new(spec.m, spec.q);
        for _ in 0..20 {
            let x: Vec<f64> = (0..spec.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            set.push(&x, rng.gen_range(0..spec.q as u32)).unwrap();
        }
        train_epoch(&mut state, &set, &TrainConfig { batch: 7, ..Default::default() }, &mut rng).unwrap();
        state
    }

    #[test]
    fn roundtrip_is_exact() {
        for spec in [build_classifier(3, 4).unwrap(), build_regression(3, 4, 1).unwrap(), build_regression(2, 5, 3).unwrap()] {
            let state = trained(&spec);
            let bytes = encode_network(&state);
            let back = decode_network(&bytes).unwrap();
            assert_eq!(back, state);
            assert_eq!(encode_network(&back), bytes);
        }
    }

    #[test]
    fn errors() {
        let state = trained(&build_regression(3, 4, 3).unwrap());
        let bytes = encode_network(&state);
        assert!(matches!(decode_network(&bytes[..bytes.len() - 3]), Err(Error::TruncatedData { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_network(&bad), Err(Error::BadMagic { .. })));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.spnn");
        save_network(&path, &state).unwrap();
        let other = build_regression(4, 4, 3).unwrap();
        assert!(matches!(load_network_expecting(&path, &other), Err(Error::SpecMismatch(_))));
        assert_eq!(load_network_expecting(&path, &state.spec).unwrap(), state);
    }
}
