use std::path::Path;

use super::BaseModel;
use crate::codec;
use crate::error::Result;

const MAGIC: &[u8; 4] = b"GFBM";

/// Writes shapes, row-major weights, subspace spec and training F1.
pub fn write_model(model: &BaseModel, path: &Path) -> Result<()> {
    codec::write(path, MAGIC, model)
}

pub fn read_model(path: &Path) -> Result<BaseModel> {
    codec::read(path, MAGIC)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{init_params, HyperParams};
    use crate::sampler::SubspaceSpec;

    #[test]
    fn round_trips_bit_exactly() {
        let hp = HyperParams::default();
        let model = BaseModel {
            params: init_params(&hp, 5, 3, 77),
            spec: SubspaceSpec {
                model_index: 4,
                node_subset: vec![0, 2, 9],
                feature_subset: vec![1, 3],
                alpha: 0.3,
                beta: 0.1 + 0.2,
                seed: u64::MAX,
            },
            train_f1: 1.0 / 3.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        write_model(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back, model);
        let bits = |m: &BaseModel| -> Vec<u64> {
            m.params.tensors().flat_map(|t| t.iter().map(|x| x.to_bits())).collect()
        };
        assert_eq!(bits(&back), bits(&model));
        assert!(crate::codec::decode::<BaseModel>(b"GFEN", &std::fs::read(&path).unwrap()).is_err());
    }
}
