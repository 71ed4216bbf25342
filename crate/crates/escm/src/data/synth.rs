//! Synthetic evolving unions of subspaces.
//!
//! Each subspace gets a random orthonormal basis and a fixed random rotation
//! plane; per time step the basis rotates by `rotation_rate` radians in that
//! plane, so the union drifts smoothly while cluster memberships stay put.
//! Points are unit-norm coefficient vectors drawn once at `t = 1` and carried
//! through the rotation, with fresh Gaussian noise per step.

use crate::data::{EvolvingSequence, Snapshot};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Configuration for [`synth_evolving`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Ambient dimension `D`.
    pub ambient_dim: usize,
    /// Points sampled per subspace.
    pub points_per_subspace: Vec<usize>,
    /// Dimension `d_i` of each subspace; `d_i < D`.
    pub subspace_dims: Vec<usize>,
    /// Number of snapshots `T`.
    pub steps: usize,
    /// Radians of basis rotation per step; `>= 0`.
    pub rotation_rate: f64,
    /// Standard deviation of additive Gaussian noise; `>= 0`.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_subspace.is_empty() {
            return Err(Error::Config("points_per_subspace: empty list".into()));
        }
        if self.points_per_subspace.len() != self.subspace_dims.len() {
            return Err(Error::Config(format!(
                "subspace_dims: {} entries but points_per_subspace has {}",
                self.subspace_dims.len(),
                self.points_per_subspace.len()
            )));
        }
        if let Some(&p) = self.points_per_subspace.iter().find(|&&p| p == 0) {
            return Err(Error::Config(format!(
                "points_per_subspace: every entry must be >= 1, found {p}"
            )));
        }
        for &d in &self.subspace_dims {
            if d == 0 {
                return Err(Error::Config(
                    "subspace_dims: every entry must be >= 1".into(),
                ));
            }
            if d >= self.ambient_dim {
                return Err(Error::Config(format!(
                    "subspace_dims: dimension {d} must be < ambient_dim {}",
                    self.ambient_dim
                )));
            }
        }
        if self.steps == 0 {
            return Err(Error::Config("steps: must be >= 1".into()));
        }
        if !(self.rotation_rate >= 0.0) {
            return Err(Error::Config(format!(
                "rotation_rate: must be >= 0, got {}",
                self.rotation_rate
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma: must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn n_subspaces(&self) -> usize {
        self.subspace_dims.len()
    }

    pub fn total_points(&self) -> usize {
        self.points_per_subspace.iter().sum()
    }
}

/// Generator output with the per-step bases exposed, so tests can project
/// points onto the exact subspace that produced them.
#[derive(Debug, Clone)]
pub struct SynthDetail {
    pub sequence: EvolvingSequence,
    /// `bases[t-1][i]`: the `D x d_i` basis of subspace `i` at step `t`.
    pub bases: Vec<Vec<DMatrix<f64>>>,
}

/// Generate an evolving union of subspaces. Deterministic given `cfg.seed`.
pub fn synth_evolving(cfg: &SynthConfig) -> Result<EvolvingSequence> {
    synth_evolving_variant(cfg, cfg.seed)
}

/// Like [`synth_evolving`], but points and noise are drawn from a separate
/// `sample_seed` stream while the subspace dynamics (bases, rotation planes)
/// still come from `cfg.seed`. Different `sample_seed`s yield independent
/// point sets on identical evolving subspaces.
pub fn synth_evolving_variant(cfg: &SynthConfig, sample_seed: u64) -> Result<EvolvingSequence> {
    Ok(synth_evolving_detailed(cfg, sample_seed)?.sequence)
}

/// [`synth_evolving_variant`] plus the per-step bases.
pub fn synth_evolving_detailed(cfg: &SynthConfig, sample_seed: u64) -> Result<SynthDetail> {
    cfg.validate()?;
    let d_ambient = cfg.ambient_dim;
    let n_sub = cfg.n_subspaces();
    let n_points = cfg.total_points();
    let sum_dims: usize = cfg.subspace_dims.iter().sum();

    let mut dyn_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Offset keeps the streams distinct even when sample_seed == cfg.seed.
    let mut smp_rng = ChaCha8Rng::seed_from_u64(sample_seed.wrapping_add(0x9E37_79B9_7F4A_7C15));

    // Bases plus one dedicated rotation target direction per subspace. When
    // the ambient dimension has room for all of them in one orthonormal
    // frame, distinct subspaces stay exactly orthogonal at every step;
    // otherwise each subspace gets its own independent frame.
    let mut bases: Vec<DMatrix<f64>> = Vec::with_capacity(n_sub);
    let mut planes: Vec<(DVector<f64>, DVector<f64>)> = Vec::with_capacity(n_sub);
    if sum_dims + n_sub <= d_ambient {
        let frame = random_orthonormal(d_ambient, sum_dims + n_sub, &mut dyn_rng);
        let mut offset = 0;
        for (i, &di) in cfg.subspace_dims.iter().enumerate() {
            let basis = frame.columns(offset, di).into_owned();
            let u = basis.column(0).into_owned();
            let v = frame.column(sum_dims + i).into_owned();
            bases.push(basis);
            planes.push((u, v));
            offset += di;
        }
    } else {
        for &di in &cfg.subspace_dims {
            let frame = random_orthonormal(d_ambient, di + 1, &mut dyn_rng);
            let basis = frame.columns(0, di).into_owned();
            let u = basis.column(0).into_owned();
            let v = frame.column(di).into_owned();
            bases.push(basis);
            planes.push((u, v));
        }
    }

    // Unit-norm coefficients, one column per point, drawn once.
    let coeffs: Vec<DMatrix<f64>> = cfg
        .subspace_dims
        .iter()
        .zip(&cfg.points_per_subspace)
        .map(|(&di, &pi)| {
            let mut c = DMatrix::zeros(di, pi);
            for j in 0..pi {
                c.set_column(j, &unit_gaussian(di, &mut smp_rng));
            }
            c
        })
        .collect();

    let labels: Vec<usize> = cfg
        .points_per_subspace
        .iter()
        .enumerate()
        .flat_map(|(i, &pi)| std::iter::repeat_n(i + 1, pi))
        .collect();

    let name = if sample_seed == cfg.seed {
        format!("synth-{}", cfg.seed)
    } else {
        format!("synth-{}-{}", cfg.seed, sample_seed)
    };

    let mut snapshots = Vec::with_capacity(cfg.steps);
    let mut step_bases = Vec::with_capacity(cfg.steps);
    for t in 1..=cfg.steps {
        if t > 1 {
            for (basis, (u, v)) in bases.iter_mut().zip(&planes) {
                rotate_in_plane(basis, u, v, cfg.rotation_rate);
            }
        }
        let mut data = DMatrix::zeros(d_ambient, n_points);
        let mut col = 0;
        for (basis, c) in bases.iter().zip(&coeffs) {
            let block = basis * c;
            data.columns_mut(col, c.ncols()).copy_from(&block);
            col += c.ncols();
        }
        if cfg.noise_sigma > 0.0 {
            for e in data.iter_mut() {
                let g: f64 = smp_rng.sample(StandardNormal);
                *e += cfg.noise_sigma * g;
            }
        }
        step_bases.push(bases.clone());
        snapshots.push(Snapshot::new(data, Some(labels.clone()), t)?);
    }

    let sequence = EvolvingSequence::new(snapshots, n_sub, name)?;
    Ok(SynthDetail {
        sequence,
        bases: step_bases,
    })
}

/// Rotate every basis column by `theta` in the plane spanned by the
/// orthonormal pair `(u, v)`: the rank-2 update
/// `w += sin(theta)*((u.w)v - (v.w)u) + (cos(theta)-1)*((u.w)u + (v.w)v)`.
/// Exactly the identity when `theta == 0`.
fn rotate_in_plane(basis: &mut DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let (sin, cos) = theta.sin_cos();
    for j in 0..basis.ncols() {
        let w = basis.column(j);
        let a = u.dot(&w);
        let b = v.dot(&w);
        let mut col = basis.column_mut(j);
        col.axpy(sin * a - (1.0 - cos) * b, v, 1.0);
        col.axpy(-sin * b - (1.0 - cos) * a, u, 1.0);
    }
}

fn unit_gaussian(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

fn random_orthonormal(nrows: usize, ncols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(nrows, ncols, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Parse a flat `key=value` synthetic config file. Lists are comma-separated.
/// Every error names the offending key.
pub fn parse_synth_config(text: &str) -> Result<SynthConfig> {
    let mut ambient_dim = None;
    let mut points = None;
    let mut dims = None;
    let mut steps = None;
    let mut rotation_rate = None;
    let mut noise_sigma = None;
    let mut seed = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key=value, got {line:?}",
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "ambient_dim" => ambient_dim = Some(parse_scalar(key, value)?),
            "points_per_subspace" => points = Some(parse_list(key, value)?),
            "subspace_dims" => dims = Some(parse_list(key, value)?),
            "steps" => steps = Some(parse_scalar(key, value)?),
            "rotation_rate" => rotation_rate = Some(parse_float(key, value)?),
            "noise_sigma" => noise_sigma = Some(parse_float(key, value)?),
            "seed" => {
                seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| Error::Config(format!("seed: invalid integer {value:?}")))?,
                )
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
    }

    let cfg = SynthConfig {
        ambient_dim: ambient_dim.ok_or_else(|| missing("ambient_dim"))?,
        points_per_subspace: points.ok_or_else(|| missing("points_per_subspace"))?,
        subspace_dims: dims.ok_or_else(|| missing("subspace_dims"))?,
        steps: steps.ok_or_else(|| missing("steps"))?,
        rotation_rate: rotation_rate.ok_or_else(|| missing("rotation_rate"))?,
        noise_sigma: noise_sigma.ok_or_else(|| missing("noise_sigma"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn missing(key: &str) -> Error {
    Error::Config(format!("{key}: missing"))
}

fn parse_scalar(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid integer {value:?}")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid float {value:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: non-finite value {value:?}")));
    }
    Ok(v)
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: invalid integer {:?}", v.trim())))
        })
        .collect()
}

/// Render a config back to the `key=value` file format.
pub fn synth_config_text(cfg: &SynthConfig) -> String {
    let join = |l: &[usize]| {
        l.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "ambient_dim={}\npoints_per_subspace={}\nsubspace_dims={}\nsteps={}\nrotation_rate={}\nnoise_sigma={}\nseed={}\n",
        cfg.ambient_dim,
        join(&cfg.points_per_subspace),
        join(&cfg.subspace_dims),
        cfg.steps,
        cfg.rotation_rate,
        cfg.noise_sigma,
        cfg.seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg() -> SynthConfig {
        SynthConfig {
            ambient_dim: 8,
            points_per_subspace: vec![10, 10],
            subspace_dims: vec![2, 2],
            steps: 5,
            rotation_rate: 0.05,
            noise_sigma: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn no_dynamics_means_identical_snapshots() {
        let cfg = SynthConfig {
            rotation_rate: 0.0,
            ..base_cfg()
        };
        let seq = synth_evolving(&cfg).unwrap();
        let first = &seq.snapshots[0].data;
        for snap in &seq.snapshots[1..] {
            assert_eq!(first, &snap.data, "t={} differs", snap.t);
        }
    }

    #[test]
    fn noiseless_points_stay_in_their_subspace() {
        let detail = synth_evolving_detailed(&base_cfg(), 7).unwrap();
        let cfg = base_cfg();
        for (t_idx, snap) in detail.sequence.snapshots.iter().enumerate() {
            let mut col = 0;
            for (i, &pi) in cfg.points_per_subspace.iter().enumerate() {
                let basis = &detail.bases[t_idx][i];
                for j in col..col + pi {
                    let x = snap.data.column(j);
                    let residual = x - basis * (basis.transpose() * x);
                    assert!(
                        residual.norm() < 1e-9,
                        "t={} point {j} off-subspace by {}",
                        t_idx + 1,
                        residual.norm()
                    );
                }
                col += pi;
            }
        }
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let cfg = SynthConfig {
            noise_sigma: 0.02,
            ..base_cfg()
        };
        let a = synth_evolving(&cfg).unwrap();
        let b = synth_evolving(&cfg).unwrap();
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            for (x, y) in sa.data.iter().zip(sb.data.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn variant_shares_dynamics_but_not_points() {
        let cfg = base_cfg();
        let a = synth_evolving_detailed(&cfg, 100).unwrap();
        let b = synth_evolving_detailed(&cfg, 200).unwrap();
        // Same bases at every step...
        for (ba, bb) in a.bases.iter().zip(&b.bases) {
            for (ma, mb) in ba.iter().zip(bb) {
                assert_eq!(ma, mb);
            }
        }
        // ...different data.
        assert_ne!(a.sequence.snapshots[0].data, b.sequence.snapshots[0].data);
    }

    #[test]
    fn roomy_configs_make_orthogonal_subspaces() {
        // 2+2 dims + 2 spares fit in 8 ambient dims: cross-subspace Gram
        // entries must vanish at every step.
        let detail = synth_evolving_detailed(&base_cfg(), 7).unwrap();
        for step in &detail.bases {
            let cross = step[0].transpose() * &step[1];
            assert!(cross.norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_orthonormality() {
        let cfg = SynthConfig {
            steps: 50,
            rotation_rate: 0.3,
            ..base_cfg()
        };
        let detail = synth_evolving_detailed(&cfg, 7).unwrap();
        let last = detail.bases.last().unwrap();
        for basis in last {
            let gram = basis.transpose() * basis;
            let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
            assert!((gram - eye).norm() < 1e-10);
        }
    }

    #[test]
    fn labels_follow_subspace_blocks() {
        let seq = synth_evolving(&base_cfg()).unwrap();
        let labels = seq.snapshots[0].labels.as_ref().unwrap();
        assert_eq!(labels.len(), 20);
        assert!(labels[..10].iter().all(|&l| l == 1));
        assert!(labels[10..].iter().all(|&l| l == 2));
    }

    #[test]
    fn config_file_round_trips_and_names_bad_keys() {
        let cfg = base_cfg();
        let text = synth_config_text(&cfg);
        assert_eq!(parse_synth_config(&text).unwrap(), cfg);

        let err = parse_synth_config("ambient_dim=4\nrotation_rate=abc\n").unwrap_err();
        assert!(err.to_string().contains("rotation_rate"), "{err}");

        let err = parse_synth_config(&text.replace("seed=7", "sneed=7")).unwrap_err();
        assert!(err.to_string().contains("sneed"), "{err}");

        let err = parse_synth_config(&text.replace("noise_sigma=0", "")).unwrap_err();
        assert!(err.to_string().contains("noise_sigma"), "{err}");
    }

    #[test]
    fn invalid_configs_name_the_key() {
        let cfg = SynthConfig {
            subspace_dims: vec![8, 2],
            ..base_cfg()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("subspace_dims"), "{err}");

        let cfg = SynthConfig {
            noise_sigma: -1.0,
            ..base_cfg()
        };
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("noise_sigma"));
    }
}
