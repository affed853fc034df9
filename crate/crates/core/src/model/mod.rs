//! The GNet network: GraphConv encoder, variational bottleneck and the
//! recognition / prediction heads, plus the joint loss.
//!
//! ```text
//! X ─ conv1 ─ ReLU ─ conv2 ─ ReLU ─ conv3 ─ H (per node)
//!                                           │
//!                 mean-pool(H) ─┬─ mu ──────┤
//!                               └─ logvar ──┴─ z
//! recognition:  log_softmax(linear(dropout(z)))
//! prediction:   log_softmax(linear(set2set(H) ∥ dropout(z)))
//! ```

mod config;
mod loss;
mod predict;

pub use config::GNetConfig;
pub use loss::{gnet_loss, kl_divergence, nll, LossBreakdown};
pub use predict::{argmax, predict, BranchPrediction, Prediction};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{BoundParams, ParamStore, Tape, Var};
use crate::graph::{one_hot_features, Dataset, Graph};
use crate::layers::{
    dropout, global_mean_pool, log_softmax, reparameterize, GraphConv, LatentState, Linear, Mode,
    Set2Set,
};
use crate::error::{Error, Result};

pub const CONV_PREFIXES: [&str; 3] = ["encoder.conv1", "encoder.conv2", "encoder.conv3"];

/// Factor applied to the Glorot draw of both classifier weights. Summed
/// neighbour aggregation lets the latent grow with node degree, and full-size
/// heads would turn that into confident random predictions at step 0.
pub const HEAD_INIT_GAIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct GNetModel {
    pub config: GNetConfig,
    pub params: ParamStore,
}

/// Outputs of one forward pass. A disabled branch yields `None`.
#[derive(Debug)]
pub struct GNetOutput<'t> {
    pub logp_r: Option<Var<'t>>,
    pub logp_p: Option<Var<'t>>,
    pub latent: LatentState<'t>,
}

/// Parameter shapes implied by a config, in path order.
fn expected_shapes(c: &GNetConfig) -> Vec<(String, (usize, usize))> {
    let mut shapes = Vec::new();
    let conv_dims = [(c.d_in, c.w1), (c.w1, c.w2), (c.w2, c.w2)];
    for (prefix, (i, o)) in CONV_PREFIXES.iter().zip(conv_dims) {
        shapes.push((format!("{prefix}.theta1"), (i, o)));
        shapes.push((format!("{prefix}.theta2"), (i, o)));
        shapes.push((format!("{prefix}.bias"), (1, o)));
    }
    for head in ["encoder.mu", "encoder.logvar"] {
        shapes.push((format!("{head}.weight"), (c.w2, c.d_z)));
        shapes.push((format!("{head}.bias"), (1, c.d_z)));
    }
    if c.recognition {
        shapes.push(("recognition.linear.weight".into(), (c.d_z, c.num_classes)));
        shapes.push(("recognition.linear.bias".into(), (1, c.num_classes)));
    }
    if c.prediction {
        for gate in crate::layers::GATES {
            let p = format!("prediction.set2set.lstm.{gate}");
            shapes.push((format!("{p}.w_x"), (2 * c.w2, c.w2)));
            shapes.push((format!("{p}.w_h"), (c.w2, c.w2)));
            shapes.push((format!("{p}.b"), (1, c.w2)));
        }
        shapes.push((
            "prediction.linear.weight".into(),
            (2 * c.w2 + c.d_z, c.num_classes),
        ));
        shapes.push(("prediction.linear.bias".into(), (1, c.num_classes)));
    }
    shapes.sort();
    shapes
}

impl GNetModel {
    /// Fresh model with seeded initialization.
    pub fn new(config: GNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let c = &config;
        let conv_dims = [(c.d_in, c.w1), (c.w1, c.w2), (c.w2, c.w2)];
        for (prefix, (i, o)) in CONV_PREFIXES.iter().zip(conv_dims) {
            GraphConv::init(&mut params, prefix, i, o, &mut rng)?;
        }
        Linear::init(&mut params, "encoder.mu", c.w2, c.d_z, &mut rng)?;
        Linear::init(&mut params, "encoder.logvar", c.w2, c.d_z, &mut rng)?;
        if c.recognition {
            Linear::init(&mut params, "recognition.linear", c.d_z, c.num_classes, &mut rng)?;
        }
        if c.prediction {
            Set2Set::init(&mut params, "prediction.set2set", c.w2, &mut rng)?;
            Linear::init(
                &mut params,
                "prediction.linear",
                2 * c.w2 + c.d_z,
                c.num_classes,
                &mut rng,
            )?;
        }
        for (path, t) in params.iter_mut() {
            if path == "recognition.linear.weight" || path == "prediction.linear.weight" {
                for v in t.data_mut() {
                    *v *= HEAD_INIT_GAIN;
                }
            }
        }
        Self::from_parts(config, params)
    }

    /// Wraps existing parameters after checking every path and shape.
    pub fn from_parts(config: GNetConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let expected = expected_shapes(&config);
        let got: Vec<(String, (usize, usize))> = params
            .iter()
            .map(|(p, t)| (p.to_string(), t.shape()))
            .collect();
        if got != expected {
            let missing: Vec<_> = expected.iter().filter(|e| !got.contains(e)).collect();
            let extra: Vec<_> = got.iter().filter(|g| !expected.contains(g)).collect();
            return Err(Error::Config(format!(
                "parameters do not match the config; expected but absent: {missing:?}; unexpected: {extra:?}"
            )));
        }
        Ok(GNetModel { config, params })
    }

    /// Fails unless the dataset's node and graph class counts match the model.
    pub fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.num_node_classes != self.config.d_in {
            return Err(Error::Config(format!(
                "model expects node features of width {}, dataset `{}` has {} node classes",
                self.config.d_in, dataset.name, dataset.num_node_classes
            )));
        }
        if dataset.num_graph_classes != self.config.num_classes {
            return Err(Error::Config(format!(
                "model has {} output classes, dataset `{}` has {}",
                self.config.num_classes, dataset.name, dataset.num_graph_classes
            )));
        }
        Ok(())
    }

    /// Forward pass over one graph with parameters already bound to `tape`.
    pub fn forward<'t, R: Rng + ?Sized>(
        &self,
        tape: &'t Tape,
        params: &BoundParams<'t>,
        graph: &Graph,
        mode: Mode,
        rng: &mut R,
    ) -> Result<GNetOutput<'t>> {
        let x = one_hot_features(graph, self.config.d_in)
            .map_err(|e| Error::Config(format!("node features do not fit d_in: {e}")))?;
        self.forward_features(tape.constant(x), graph.edges(), params, mode, rng)
    }

    /// Forward pass from an explicit `N x d_in` feature matrix.
    pub fn forward_features<'t, R: Rng + ?Sized>(
        &self,
        x: Var<'t>,
        edges: &[(usize, usize)],
        params: &BoundParams<'t>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<GNetOutput<'t>> {
        let c = &self.config;
        let (n, d) = x.shape();
        if d != c.d_in {
            return Err(Error::Config(format!(
                "feature width {d} does not match d_in {}",
                c.d_in
            )));
        }
        if n == 0 {
            return Err(Error::Argument("graph has no nodes".into()));
        }

        let mut h = x;
        for (k, prefix) in CONV_PREFIXES.iter().enumerate() {
            h = GraphConv::bind(params, prefix)?.forward(h, edges)?;
            if k < 2 {
                h = h.relu()?;
            }
        }

        let pooled = global_mean_pool(h, &vec![0; n])?;
        let mu = Linear::bind(params, "encoder.mu")?.forward(pooled)?;
        let logvar = Linear::bind(params, "encoder.logvar")?.forward(pooled)?;
        let z = reparameterize(mu, logvar, mode, rng)?;

        let logp_r = if c.recognition {
            let zr = dropout(z, c.dropout, mode, rng)?;
            let logits = Linear::bind(params, "recognition.linear")?.forward(zr)?;
            Some(log_softmax(logits)?)
        } else {
            None
        };

        let logp_p = if c.prediction {
            let readout = Set2Set::bind(params, "prediction.set2set", c.set2set_steps)?
                .forward(h)?
                .q_star;
            let zp = dropout(z, c.dropout, mode, rng)?;
            let logits = Linear::bind(params, "prediction.linear")?.forward(readout.concat_cols(zp)?)?;
            Some(log_softmax(logits)?)
        } else {
            None
        };

        Ok(GNetOutput {
            logp_r,
            logp_p,
            latent: LatentState { mu, logvar, z },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn small() -> GNetConfig {
        GNetConfig {
            w1: 6,
            w2: 5,
            d_z: 4,
            ..GNetConfig::new(3, 4)
        }
    }

    fn graph() -> Graph {
        Graph::new(vec![0, 2, 1, 2], vec![(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn preset_first_layer_shapes() {
        let m = GNetModel::new(GNetConfig::msrc9(), 0).unwrap();
        assert_eq!(m.params.get("encoder.conv1.theta1").unwrap().shape(), (10, 1280));
        assert!(m.params.get("prediction.linear.weight").is_none());
    }

    #[test]
    fn maniac_first_layer_shapes() {
        let c = GNetConfig {
            w2: 8,
            d_z: 4,
            ..GNetConfig::maniac()
        };
        let m = GNetModel::new(c, 0).unwrap();
        assert_eq!(m.params.get("encoder.conv1.theta1").unwrap().shape(), (21, 672));
        assert_eq!(m.params.get("encoder.conv1.theta2").unwrap().shape(), (21, 672));
    }

    #[test]
    fn outputs_are_log_distributions() {
        let m = GNetModel::new(small(), 7).unwrap();
        let tape = Tape::new();
        let b = m.params.bind(&tape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = m.forward(&tape, &b, &graph(), Mode::Train, &mut rng).unwrap();
        for lp in [out.logp_r.unwrap(), out.logp_p.unwrap()] {
            let total: f64 = lp.value().data().iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(lp.shape(), (1, 4));
        }
    }

    #[test]
    fn disabled_branch_is_absent() {
        let m = GNetModel::new(
            GNetConfig {
                prediction: false,
                ..small()
            },
            1,
        )
        .unwrap();
        let tape = Tape::new();
        let b = m.params.bind(&tape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = m.forward(&tape, &b, &graph(), Mode::Eval, &mut rng).unwrap();
        assert!(out.logp_r.is_some() && out.logp_p.is_none());
    }

    #[test]
    fn feature_width_mismatch() {
        let m = GNetModel::new(small(), 1).unwrap();
        let tape = Tape::new();
        let b = m.params.bind(&tape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = Graph::new(vec![0, 5], vec![]).unwrap();
        let err = m.forward(&tape, &b, &bad, Mode::Eval, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let x = tape.constant(Tensor::zeros(2, 4));
        assert!(matches!(
            m.forward_features(x, &[], &b, Mode::Eval, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn from_parts_rejects_wrong_shapes() {
        let m = GNetModel::new(small(), 1).unwrap();
        let mut params = m.params.clone();
        *params.get_mut("encoder.mu.bias").unwrap() = Tensor::zeros(1, 9);
        assert!(GNetModel::from_parts(small(), params).is_err());
    }

    #[test]
    fn eval_is_deterministic() {
        let m = GNetModel::new(small(), 3).unwrap();
        let run = |seed| {
            let tape = Tape::new();
            let b = m.params.bind(&tape);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = m.forward(&tape, &b, &graph(), Mode::Eval, &mut rng).unwrap();
            (out.logp_r.unwrap().value(), out.logp_p.unwrap().value())
        };
        assert_eq!(run(1), run(2));
    }
}
