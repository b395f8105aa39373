use super::{Codec, CodecOutput, SideInfo};
use crate::channel::MetadataSpec;
use crate::cloud::{build_knn_graph, normalize, PointCloud};
use crate::error::{dims, invalid, Result};
use crate::neural::{decode, encode, GnnModel};

/// Trained autoencoder: the latent code is the whole transmission, no basis
/// or other metadata is charged.
#[derive(Debug, Clone, Copy)]
pub struct GnnCodec<'a> {
    pub model: &'a GnnModel,
}

impl Codec for GnnCodec<'_> {
    fn name(&self) -> String {
        "gnn".into()
    }

    fn encode(&self, cloud: &PointCloud) -> Result<CodecOutput> {
        let n = self.model.arch.n_points;
        if cloud.len() != n {
            return Err(dims(format!("cloud '{}' has {} points, model expects {n}", cloud.id, cloud.len())));
        }
        let (norm, affine) = normalize(cloud)?;
        let g = build_knn_graph(&norm, self.model.arch.knn_k)?.into_graph();
        let z = encode(self.model, &norm, &g)?;
        Ok(CodecOutput { data_reals: z.flatten(), metadata: MetadataSpec::NONE, side_info: SideInfo::Gnn { affine } })
    }

    fn decode(&self, output: &CodecOutput, received: &[f64]) -> Result<PointCloud> {
        let SideInfo::Gnn { affine } = &output.side_info else {
            return Err(invalid("side information does not belong to the GNN codec"));
        };
        affine.invert(&decode(self.model, received)?)
    }
}
