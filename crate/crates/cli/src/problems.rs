use anyhow::{Context, Result};
use splda::wdro::{load_libsvm, synth_regression_data, synth_ring_classification, ClassificationDataset, RegressionDataset};
use splda::{CompositeMinimaxProblem, ConvexSet, KlInstance, LinregWdro, MlpParams, MlpWdro, ToyId, ToyProblem2D};

use crate::config::{Family, ProblemConfig};

pub enum Data {
    None,
    Regression(RegressionDataset),
    Classification(ClassificationDataset),
}

pub struct Built {
    pub problem: Box<dyn CompositeMinimaxProblem>,
    pub data: Data,
    /// Default starting point: zero (projected onto `X`), or a seeded network init.
    pub x0: Vec<f64>,
    /// Default dual start: uniform weights on a simplex, else the projection of zero.
    pub y0: Vec<f64>,
}

impl Built {
    pub fn is_wdro(&self) -> bool {
        !matches!(self.data, Data::None)
    }
}

fn default_y0(set: &ConvexSet) -> Vec<f64> {
    match set {
        ConvexSet::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
        _ => set.project(&vec![0.0; set.dim()]).expect("dimension matches"),
    }
}

pub fn build(cfg: &ProblemConfig) -> Result<Built> {
    let (problem, data): (Box<dyn CompositeMinimaxProblem>, Data) = match cfg.family {
        Family::CubicQuadratic => (Box::new(ToyProblem2D::new(ToyId::CubicQuadratic)), Data::None),
        Family::SineBilinear => (Box::new(ToyProblem2D::new(ToyId::SineBilinear)), Data::None),
        Family::Bilinear => (Box::new(ToyProblem2D::new(ToyId::Bilinear)), Data::None),
        Family::KlPlanar => (Box::new(KlInstance::planar()), Data::None),
        Family::KlScalar => (Box::new(KlInstance::scalar()), Data::None),
        Family::LinregWdro => {
            let data = match &cfg.data {
                Some(path) => load_libsvm(path, None).with_context(|| format!("loading {}", path.display()))?,
                None => synth_regression_data(cfg.n, cfg.d, cfg.seed, cfg.target_mode)?,
            };
            let p = match cfg.trust_radius {
                Some(r) => LinregWdro::with_trust_radius(data.clone(), cfg.rho, cfg.p, r)?,
                None => LinregWdro::new(data.clone(), cfg.rho, cfg.p)?,
            };
            (Box::new(p), Data::Regression(data))
        }
        Family::MlpWdro => {
            let data = synth_ring_classification(cfg.n, cfg.eta, cfg.seed)?;
            let p = match cfg.trust_radius {
                Some(r) => MlpWdro::with_trust_radius(data.clone(), cfg.rho, cfg.p, r)?,
                None => MlpWdro::new(data.clone(), cfg.rho, cfg.p)?,
            };
            (Box::new(p), Data::Classification(data))
        }
    };
    let x0 = match cfg.family {
        Family::MlpWdro => MlpParams::init(2, cfg.seed).flatten(),
        _ => problem.set_x().project(&vec![0.0; problem.dim_x()])?,
    };
    let y0 = default_y0(problem.set_y());
    Ok(Built { problem, data, x0, y0 })
}
