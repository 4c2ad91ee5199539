//! Simulation geometry, large-scale path loss and Rician/Rayleigh fading.
//!
//! The BS sits at the origin, the RIS 130 m away along the x axis (both
//! 25 m high) and users are dropped uniformly in a 20 m square centred
//! under the RIS at 1.5 m height. Path gains are divided by the receiver
//! noise power, so downstream code works with `sigma2 = 1`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::ScatteringMatrix;
use crate::linalg::{self, CMat};
use crate::model::SystemConfig;
use crate::rng;

pub const BS_HEIGHT: f64 = 25.0;
pub const RIS_HEIGHT: f64 = 25.0;
pub const RIS_DISTANCE: f64 = 130.0;
pub const USER_HEIGHT: f64 = 1.5;
pub const SQUARE_SIDE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub bs_position: [f64; 3],
    pub ris_position: [f64; 3],
    pub user_positions: Vec<[f64; 3]>,
}

impl ScenarioGeometry {
    /// Centre of the user square (ground projection of the RIS).
    pub fn square_center(&self) -> [f64; 2] {
        [self.ris_position[0], self.ris_position[1]]
    }
}

/// Drops `cfg.k_users` users uniformly in the square under the RIS.
pub fn generate_scenario(cfg: &SystemConfig, seed: u64) -> ScenarioGeometry {
    let mut rng = rng::stream(rng::derive(seed, &[0x6765_6f6d]));
    let half = SQUARE_SIDE / 2.0;
    let user_positions = (0..cfg.k_users)
        .map(|_| {
            let x = RIS_DISTANCE + rng.random_range(-half..half);
            let y = rng.random_range(-half..half);
            [x, y, USER_HEIGHT]
        })
        .collect();
    ScenarioGeometry {
        bs_position: [0.0, 0.0, BS_HEIGHT],
        ris_position: [RIS_DISTANCE, 0.0, RIS_HEIGHT],
        user_positions,
    }
}

/// Log-distance path loss `intercept + slope * log10(d)` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl PathLoss {
    pub fn loss_db(&self, distance: f64) -> f64 {
        self.intercept_db + self.slope_db * distance.max(1.0).log10()
    }

    /// Amplitude gain `10^(-PL/20)`.
    pub fn amplitude(&self, distance: f64) -> f64 {
        10f64.powf(-self.loss_db(distance) / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FadingParams {
    /// Rician factor of the BS-RIS link (linear).
    pub rician_k: f64,
    pub bs_ris: PathLoss,
    pub ris_user: PathLoss,
    pub bs_user: PathLoss,
    /// Receiver noise power used to normalise the user-side channels. The
    /// default is thermal noise over about 1 GHz with a 14 dB noise figure.
    pub noise_power_dbm: f64,
    /// When false, channels keep their raw path gains.
    pub normalize: bool,
}

impl Default for FadingParams {
    fn default() -> Self {
        let ris = PathLoss { intercept_db: 35.6, slope_db: 22.0 };
        Self {
            rician_k: 3.0,
            bs_ris: ris,
            ris_user: ris,
            bs_user: PathLoss { intercept_db: 32.6, slope_db: 36.7 },
            noise_power_dbm: -70.0,
            normalize: true,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rician_k >= 0.0) {
            return Err(Error::InvalidConfig("rician_k must be non-negative".into()));
        }
        for pl in [self.bs_ris, self.ris_user, self.bs_user] {
            if !(pl.slope_db > 0.0) {
                return Err(Error::InvalidConfig("path-loss exponents must be positive".into()));
            }
        }
        Ok(())
    }

    /// Amplitude factor applied at the receiver so that `sigma2 = 1`.
    fn receiver_scale(&self) -> f64 {
        if self.normalize {
            // dBm -> W, then 1/sqrt.
            10f64.powf(-(self.noise_power_dbm - 30.0) / 20.0)
        } else {
            1.0
        }
    }
}

/// Raw channel matrices of one Monte-Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS to RIS, `n_ris x n_bs`.
    pub g: CMat,
    /// RIS to user k, `n_u x n_ris`.
    pub g_k: Vec<CMat>,
    /// BS to user k, `n_u x n_bs`.
    pub f_k: Vec<CMat>,
}

impl ChannelSet {
    pub fn k_users(&self) -> usize {
        self.f_k.len()
    }

    pub fn n_ris(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_bs(&self) -> usize {
        self.g.ncols()
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let ok = self.g.shape() == (cfg.n_ris, cfg.n_bs)
            && self.g_k.len() == cfg.k_users
            && self.f_k.len() == cfg.k_users
            && self.g_k.iter().all(|m| m.shape() == (cfg.n_u, cfg.n_ris))
            && self.f_k.iter().all(|m| m.shape() == (cfg.n_u, cfg.n_bs));
        if !ok {
            return Err(Error::Dimension("channel set does not match the configuration".into()));
        }
        let finite = std::iter::once(&self.g)
            .chain(&self.g_k)
            .chain(&self.f_k)
            .all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        if !finite {
            return Err(Error::Numeric("channel set has non-finite entries".into()));
        }
        Ok(())
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Deterministic rank-one LOS component of the BS-RIS link.
///
/// The BS is a half-wavelength ULA along y; the RIS a half-wavelength
/// planar array in the y-z plane, filled column-major on a near-square
/// grid. Every entry has unit modulus.
pub fn los_component(geom: &ScenarioGeometry, n_ris: usize, n_bs: usize) -> CMat {
    let dx = geom.ris_position[0] - geom.bs_position[0];
    let dy = geom.ris_position[1] - geom.bs_position[1];
    let dz = geom.ris_position[2] - geom.bs_position[2];
    let horiz = (dx * dx + dy * dy).sqrt();
    let azimuth = dy.atan2(dx);
    let elevation = dz.atan2(horiz);

    let rows = (n_ris as f64).sqrt().ceil() as usize;
    let ris: Vec<_> = (0..n_ris)
        .map(|m| {
            let (my, mz) = ((m / rows) as f64, (m % rows) as f64);
            let phase = PI * (my * azimuth.sin() * elevation.cos() + mz * elevation.sin());
            num_complex::Complex64::from_polar(1.0, phase)
        })
        .collect();
    let bs: Vec<_> = (0..n_bs)
        .map(|n| num_complex::Complex64::from_polar(1.0, PI * n as f64 * azimuth.sin() * elevation.cos()))
        .collect();
    CMat::from_fn(n_ris, n_bs, |m, n| ris[m] * bs[n].conj())
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    // Column-major draw order.
    let mut m = linalg::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng::complex_normal(rng, variance);
        }
    }
    m
}

/// Draws `G`, `G_k` and `F_k` for the given geometry.
pub fn generate_channels(geom: &ScenarioGeometry, fp: &FadingParams, cfg: &SystemConfig, seed: u64) -> ChannelSet {
    let mut rng = rng::stream(rng::derive(seed, &[0x6368_616e]));
    let kappa = fp.rician_k;
    let rx = fp.receiver_scale();

    let d_bs_ris = distance(&geom.bs_position, &geom.ris_position);
    let amp = fp.bs_ris.amplitude(d_bs_ris);
    let los = los_component(geom, cfg.n_ris, cfg.n_bs);
    let scatter = gaussian_matrix(&mut rng, cfg.n_ris, cfg.n_bs, 1.0);
    let (w_los, w_nlos) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    };
    let g = (los.scale(w_los) + scatter.scale(w_nlos)).scale(amp);

    let mut g_k = Vec::with_capacity(cfg.k_users);
    let mut f_k = Vec::with_capacity(cfg.k_users);
    for u in &geom.user_positions {
        let a_ru = fp.ris_user.amplitude(distance(&geom.ris_position, u)) * rx;
        let a_bu = fp.bs_user.amplitude(distance(&geom.bs_position, u)) * rx;
        g_k.push(gaussian_matrix(&mut rng, cfg.n_u, cfg.n_ris, a_ru * a_ru));
        f_k.push(gaussian_matrix(&mut rng, cfg.n_u, cfg.n_bs, a_bu * a_bu));
    }
    ChannelSet { g, g_k, f_k }
}

/// `H_k(Phi) = G_k Phi G + F_k`.
pub fn effective_channel(ch: &ChannelSet, phi: &ScatteringMatrix, k: usize) -> Result<CMat> {
    if k >= ch.k_users() {
        return Err(Error::Dimension(format!("user {k} of {}", ch.k_users())));
    }
    let n = ch.n_ris();
    if phi.phi.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "scattering matrix is {:?}, RIS has {n} elements",
            phi.phi.shape()
        )));
    }
    if !phi.arch.has_ris() {
        return Ok(ch.f_k[k].clone());
    }
    let cascade = if phi.arch.is_diagonal() {
        let mut gk = ch.g_k[k].clone();
        for (j, mut col) in gk.column_iter_mut().enumerate() {
            col *= phi.phi[(j, j)];
        }
        gk * &ch.g
    } else {
        &ch.g_k[k] * &phi.phi * &ch.g
    };
    Ok(cascade + &ch.f_k[k])
}

/// Effective channels of every user.
pub fn effective_channels(ch: &ChannelSet, phi: &ScatteringMatrix) -> Result<Vec<CMat>> {
    (0..ch.k_users()).map(|k| effective_channel(ch, phi, k)).collect()
}

const DUMP_MAGIC: &str = "# risee channel dump v1";

/// Writes a channel set as text: a magic line, then for each matrix a
/// `name rows cols` header followed by `rows` lines of `re im` pairs in
/// row-major order. Matrices appear as `g`, `g_k.<k>`, `f_k.<k>`.
pub fn write_channel_dump(ch: &ChannelSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{DUMP_MAGIC}").unwrap();
    writeln!(out, "users {}", ch.k_users()).unwrap();
    let mut put = |name: String, m: &CMat| {
        writeln!(out, "{name} {} {}", m.nrows(), m.ncols()).unwrap();
        for i in 0..m.nrows() {
            let line: Vec<String> = (0..m.ncols())
                .map(|j| format!("{:e} {:e}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    };
    put("g".into(), &ch.g);
    for (k, m) in ch.g_k.iter().enumerate() {
        put(format!("g_k.{k}"), m);
    }
    for (k, m) in ch.f_k.iter().enumerate() {
        put(format!("f_k.{k}"), m);
    }
    std::fs::write(path, out).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn read_channel_dump(path: &Path) -> Result<ChannelSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let mut lines = text.lines();
    let bad = |msg: &str| Error::Parse(format!("{}: {msg}", path.display()));
    if lines.next() != Some(DUMP_MAGIC) {
        return Err(bad("missing dump header"));
    }
    let users: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("users "))
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| bad("missing user count"))?;

    let mut read_matrix = |expect: &str| -> Result<CMat> {
        let header = lines.next().ok_or_else(|| bad("truncated file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != expect {
            return Err(bad(&format!("expected matrix '{expect}', found '{header}'")));
        }
        let rows: usize = parts[1].parse().map_err(|_| bad("bad row count"))?;
        let cols: usize = parts[2].parse().map_err(|_| bad("bad column count"))?;
        let mut m = linalg::zeros(rows, cols);
        for i in 0..rows {
            let vals: Vec<f64> = lines
                .next()
                .ok_or_else(|| bad("truncated matrix"))?
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad number"))?;
            if vals.len() != 2 * cols {
                return Err(bad("wrong number of entries in row"));
            }
            for j in 0..cols {
                m[(i, j)] = linalg::c(vals[2 * j], vals[2 * j + 1]);
            }
        }
        Ok(m)
    };
    let g = read_matrix("g")?;
    let g_k = (0..users).map(|k| read_matrix(&format!("g_k.{k}"))).collect::<Result<_>>()?;
    let f_k = (0..users).map(|k| read_matrix(&format!("f_k.{k}"))).collect::<Result<_>>()?;
    Ok(ChannelSet { g, g_k, f_k })
}
