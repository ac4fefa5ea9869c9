//! Model files, seeded random models, and exact-versus-mean-field runs.
//!
//! # File format
//!
//! A model file is line oriented.  Blank lines and text after `#` are
//! ignored.  The first record is the header `classical N` or `quantum N`;
//! the rest are
//!
//! ```text
//! h i value              w i j value              v i j k value
//! h i s value            w i j s t value          v i j k s t u value
//! meta key value…
//! ```
//!
//! with the second row for quantum models.  Sites `i, j, k` count from 1,
//! Pauli labels `s, t, u` are 1, 2 or 3.  Site tuples may be written in any
//! order; they are sorted on reading, with Pauli labels permuted alongside.
//! Absent terms are zero.  A `meta` value is the rest of its line with
//! surrounding whitespace removed, so it cannot contain `#`.  [`emit`]
//! writes the canonical form: header, metadata, then `h`, `w`, `v` records
//! in lexicographic order, values with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::cbm::{
    self, exact_moments_classical, kl_divergence, CbmParams, ProductCoords, CLASSICAL_SITE_CAP,
};
use crate::cbm_meanfield::{e_project_classical, m_project_classical};
use crate::error::{Error, Result};
use crate::index;
use crate::qbm::{
    density_matrix, first_moments, product_state, quantum_relative_entropy, QProductCoords,
    QbmParams,
};
use crate::qbm_meanfield::{e_project_quantum, m_project_quantum};
use crate::rng::SeededRng;
use crate::solver::{SolveReport, SolverConfig};
use crate::tensor::{Pauli, QUANTUM_SITE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Classical,
    Quantum,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Classical => "classical",
            ModelKind::Quantum => "quantum",
        }
    }

    pub fn site_cap(self) -> usize {
        match self {
            ModelKind::Classical => CLASSICAL_SITE_CAP,
            ModelKind::Quantum => QUANTUM_SITE_CAP,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "classical" => Ok(ModelKind::Classical),
            "quantum" => Ok(ModelKind::Quantum),
            _ => Err(format!("unknown model kind `{s}`")),
        }
    }
}

/// Index tuple of one term: sorted 0-based sites, plus Pauli labels for quantum models.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub sites: Vec<usize>,
    pub spins: Vec<Pauli>,
}

impl Term {
    fn label(&self, kind: &str) -> String {
        let mut s = kind.to_string();
        for i in &self.sites {
            let _ = write!(s, " {}", i + 1);
        }
        for p in &self.spins {
            let _ = write!(s, " {}", p.label());
        }
        s
    }
}

/// Sparse model description as read from or written to a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub kind: ModelKind,
    pub n: usize,
    pub h: BTreeMap<Term, f64>,
    pub w: BTreeMap<Term, f64>,
    pub v: BTreeMap<Term, f64>,
    pub metadata: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(kind: ModelKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoSites);
        }
        if n > kind.site_cap() {
            return Err(Error::SiteCapExceeded {
                n,
                cap: kind.site_cap(),
            });
        }
        Ok(Self {
            kind,
            n,
            h: BTreeMap::new(),
            w: BTreeMap::new(),
            v: BTreeMap::new(),
            metadata: BTreeMap::new(),
        })
    }

    fn check_kind(&self, expected: ModelKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::KindMismatch {
                expected: expected.name(),
                found: self.kind.name(),
            });
        }
        Ok(())
    }

    pub fn to_cbm(&self) -> Result<CbmParams> {
        self.check_kind(ModelKind::Classical)?;
        let mut p = CbmParams::zeros(self.n)?;
        for (t, &x) in &self.h {
            p.set_h(t.sites[0], x)?;
        }
        for (t, &x) in &self.w {
            p.set_w(t.sites[0], t.sites[1], x)?;
        }
        for (t, &x) in &self.v {
            p.set_v(t.sites[0], t.sites[1], t.sites[2], x)?;
        }
        Ok(p)
    }

    pub fn to_qbm(&self) -> Result<QbmParams> {
        self.check_kind(ModelKind::Quantum)?;
        let mut p = QbmParams::zeros(self.n)?;
        for (t, &x) in &self.h {
            p.set_h(t.sites[0], t.spins[0], x)?;
        }
        for (t, &x) in &self.w {
            p.set_w(t.sites[0], t.sites[1], t.spins[0], t.spins[1], x)?;
        }
        for (t, &x) in &self.v {
            let (s, q) = (&t.sites, &t.spins);
            p.set_v(s[0], s[1], s[2], q[0], q[1], q[2], x)?;
        }
        Ok(p)
    }

    /// Nonzero entries of `p`.
    pub fn from_cbm(p: &CbmParams) -> Result<Self> {
        let mut f = Self::new(ModelKind::Classical, p.n())?;
        let term = |sites: Vec<usize>| Term {
            sites,
            spins: vec![],
        };
        for i in 0..p.n() {
            if p.h(i) != 0.0 {
                f.h.insert(term(vec![i]), p.h(i));
            }
        }
        for ((i, j), x) in p.pair_couplings() {
            if x != 0.0 {
                f.w.insert(term(vec![i, j]), x);
            }
        }
        for ((i, j, k), x) in p.triple_couplings() {
            if x != 0.0 {
                f.v.insert(term(vec![i, j, k]), x);
            }
        }
        Ok(f)
    }

    /// Nonzero entries of `p`.
    pub fn from_qbm(p: &QbmParams) -> Result<Self> {
        let mut f = Self::new(ModelKind::Quantum, p.n())?;
        for i in 0..p.n() {
            for s in Pauli::ALL {
                let x = p.h(i, s);
                if x != 0.0 {
                    f.h.insert(Term { sites: vec![i], spins: vec![s] }, x);
                }
            }
        }
        for ((i, j), b) in p.pair_couplings() {
            for s in Pauli::ALL {
                for t in Pauli::ALL {
                    let x = b[s.slot()][t.slot()];
                    if x != 0.0 {
                        f.w.insert(Term { sites: vec![i, j], spins: vec![s, t] }, x);
                    }
                }
            }
        }
        for ((i, j, k), b) in p.triple_couplings() {
            for s in Pauli::ALL {
                for t in Pauli::ALL {
                    for u in Pauli::ALL {
                        let x = b[s.slot()][t.slot()][u.slot()];
                        if x != 0.0 {
                            f.v.insert(
                                Term { sites: vec![i, j, k], spins: vec![s, t, u] },
                                x,
                            );
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    /// Multiplies every `w` and `v` entry by `factor`.
    pub fn scale_couplings(&self, factor: f64) -> Self {
        let mut f = self.clone();
        f.w.values_mut().for_each(|x| *x *= factor);
        f.v.values_mut().for_each(|x| *x *= factor);
        f
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based character columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (col, (byte, c)) in line.char_indices().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some((col + 1, byte)),
            (true, Some((sc, sb))) => {
                out.push((sc, &line[sb..byte]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some((sc, sb)) = start {
        out.push((sc, &line[sb..]));
    }
    out
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<ModelFile> {
    let mut model: Option<ModelFile> = None;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(&(col0, head)) = toks.first() else {
            continue;
        };
        let Some(m) = model.as_mut() else {
            let kind: ModelKind = head
                .parse()
                .map_err(|e: String| parse_err(ln, col0, format!("{e}; expected header `classical N` or `quantum N`")))?;
            if toks.len() != 2 {
                return Err(parse_err(ln, col0, "header must be `KIND N`"));
            }
            let (c, s) = toks[1];
            let n: usize = s
                .parse()
                .map_err(|_| parse_err(ln, c, format!("invalid site count `{s}`")))?;
            model = Some(ModelFile::new(kind, n).map_err(|e| parse_err(ln, c, e.to_string()))?);
            continue;
        };
        if head == "meta" {
            if toks.len() < 3 {
                return Err(parse_err(ln, col0, "meta record needs a key and a value"));
            }
            let (vc, _) = toks[2];
            let value = line
                .chars()
                .skip(vc - 1)
                .collect::<String>()
                .trim_end()
                .to_string();
            m.metadata.insert(toks[1].1.to_string(), value);
            continue;
        }
        let order = match head {
            "h" => 1,
            "w" => 2,
            "v" => 3,
            _ => return Err(parse_err(ln, col0, format!("unknown record `{head}`"))),
        };
        let spins = if m.kind == ModelKind::Quantum { order } else { 0 };
        let expected = 1 + order + spins + 1;
        if toks.len() != expected {
            let col = toks.get(expected).map_or(col0, |t| t.0);
            return Err(parse_err(
                ln,
                col,
                format!("`{head}` record takes {} fields, found {}", expected - 1, toks.len() - 1),
            ));
        }
        let mut sites = Vec::with_capacity(order);
        for &(c, s) in &toks[1..=order] {
            let i: usize = s
                .parse()
                .map_err(|_| parse_err(ln, c, format!("invalid site index `{s}`")))?;
            if i == 0 || i > m.n {
                return Err(parse_err(ln, c, format!("site {i} outside 1..={}", m.n)));
            }
            sites.push(i - 1);
        }
        let mut paulis = Vec::with_capacity(spins);
        for &(c, s) in &toks[1 + order..1 + order + spins] {
            let p = s
                .parse::<u8>()
                .map_err(|_| Error::InvalidPauli(0))
                .and_then(Pauli::new)
                .map_err(|_| parse_err(ln, c, format!("invalid Pauli label `{s}`, expected 1, 2 or 3")))?;
            paulis.push(p);
        }
        let (vc, vs) = toks[expected - 1];
        let value: f64 = vs
            .parse()
            .map_err(|_| parse_err(ln, vc, format!("invalid number `{vs}`")))?;
        if !value.is_finite() {
            return Err(parse_err(ln, vc, format!("non-finite value `{vs}`")));
        }
        index::canonicalize(m.n, &mut sites, &mut paulis)
            .map_err(|e| parse_err(ln, toks[1].0, e.to_string()))?;
        let term = Term {
            sites,
            spins: paulis,
        };
        let map = match order {
            1 => &mut m.h,
            2 => &mut m.w,
            _ => &mut m.v,
        };
        if map.contains_key(&term) {
            return Err(Error::DuplicateTerm(format!(
                "`{}` on line {ln}",
                term.label(head)
            )));
        }
        map.insert(term, value);
    }
    model.ok_or_else(|| parse_err(1, 1, "missing header"))
}

/// Reads and parses a model file from disk.
pub fn read_model(path: &std::path::Path) -> Result<ModelFile> {
    parse_model(&std::fs::read_to_string(path)?)
}

/// Canonical text form of `model`.
pub fn emit(model: &ModelFile) -> String {
    let mut out = format!("{} {}\n", model.kind.name(), model.n);
    for (k, v) in &model.metadata {
        let _ = writeln!(out, "meta {k} {v}");
    }
    for (name, map) in [("h", &model.h), ("w", &model.w), ("v", &model.v)] {
        for (t, x) in map {
            let _ = writeln!(out, "{} {x:.16e}", t.label(name));
        }
    }
    out
}

/// Standard deviations of the Gaussian draws for `h`, `w` and `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scales {
    pub h: f64,
    pub w: f64,
    pub v: f64,
}

/// Seeded random model with independent zero-mean Gaussian entries.
///
/// Draw order: `h` by site (and Pauli label), then `w` and `v` over
/// lexicographically ordered site tuples (Pauli labels innermost).  A group
/// whose scale is zero is skipped entirely and its terms omitted.  Deviates
/// come from [`SeededRng::normal`].
pub fn gen_random_model(kind: ModelKind, n: usize, scales: Scales, seed: u64) -> Result<ModelFile> {
    for x in [scales.h, scales.w, scales.v] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidConfig(format!("scale {x} must be finite and nonnegative")));
        }
    }
    let mut m = ModelFile::new(kind, n)?;
    let mut rng = SeededRng::new(seed);
    let labels: Vec<Vec<Pauli>> = match kind {
        ModelKind::Classical => vec![vec![]],
        ModelKind::Quantum => Pauli::ALL.iter().map(|&s| vec![s]).collect(),
    };
    let product = |a: &[Vec<Pauli>], b: &[Vec<Pauli>]| -> Vec<Vec<Pauli>> {
        a.iter()
            .flat_map(|x| b.iter().map(move |y| [x.clone(), y.clone()].concat()))
            .collect()
    };
    let labels2 = product(&labels, &labels);
    let labels3 = product(&labels2, &labels);
    let mut draw = |map: &mut BTreeMap<Term, f64>, sites: Vec<usize>, ls: &[Vec<Pauli>], scale: f64| {
        for spins in ls {
            map.insert(
                Term {
                    sites: sites.clone(),
                    spins: spins.clone(),
                },
                scale * rng.normal(),
            );
        }
    };
    if scales.h > 0.0 {
        for i in 0..n {
            draw(&mut m.h, vec![i], &labels, scales.h);
        }
    }
    if scales.w > 0.0 {
        for (i, j) in index::pairs(n) {
            draw(&mut m.w, vec![i, j], &labels2, scales.w);
        }
    }
    if scales.v > 0.0 {
        for (i, j, k) in index::triples(n) {
            draw(&mut m.v, vec![i, j, k], &labels3, scales.v);
        }
    }
    m.metadata.insert("generator".into(), "xoshiro256** normal".into());
    m.metadata.insert("seed".into(), seed.to_string());
    m.metadata.insert(
        "scales".into(),
        format!("{:e} {:e} {:e}", scales.h, scales.w, scales.v),
    );
    Ok(m)
}

/// One magnetization component: site (1-based) and, for quantum models, Pauli label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub site: usize,
    pub s: Option<u8>,
    /// Exact first moment.
    pub exact: f64,
    /// e-projection (naive mean-field) magnetization.
    pub e_proj: f64,
    /// m-projection magnetization.
    pub m_proj: f64,
    /// `|exact − e_proj|`.
    pub e_abs_err: f64,
    /// `|exact − m_proj|`.
    pub m_abs_err: f64,
}

/// Exact moments against both projections for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub kind: ModelKind,
    pub n: usize,
    /// Coupling rescaling factor in a sweep.
    pub scale: Option<f64>,
    pub rows: Vec<ReportRow>,
    pub solver: SolveReport,
    /// `D(τ_e ‖ p)` at the e-projection.
    pub e_divergence: Option<f64>,
    /// `D(p ‖ τ_m)` at the m-projection.
    pub m_divergence: Option<f64>,
    /// Seconds spent in [`run_compare`].
    pub wall_time: Option<f64>,
}

impl ComparisonReport {
    pub fn mean_abs_e_error(&self) -> f64 {
        self.rows.iter().map(|r| r.e_abs_err).sum::<f64>() / self.rows.len() as f64
    }
}

fn rows(labels: &[(usize, Option<u8>)], exact: &[f64], e: &[f64], m: &[f64]) -> Vec<ReportRow> {
    labels
        .iter()
        .enumerate()
        .map(|(k, &(site, s))| ReportRow {
            site,
            s,
            exact: exact[k],
            e_proj: e[k],
            m_proj: m[k],
            e_abs_err: (exact[k] - e[k]).abs(),
            m_abs_err: (exact[k] - m[k]).abs(),
        })
        .collect()
}

/// Exact moments, e- and m-projections, and divergences for `model`.
pub fn run_compare(model: &ModelFile, cfg: &SolverConfig) -> Result<ComparisonReport> {
    let start = Instant::now();
    let (labels, exact, e, m, solver, m_divergence) = match model.kind {
        ModelKind::Classical => {
            let p = model.to_cbm()?;
            let exact = exact_moments_classical(&p)?.m().to_vec();
            let (e, solver) = e_project_classical(&p, cfg)?;
            let m = m_project_classical(&p)?;
            // exact magnetizations can round to ±1 under strong fields
            let m_div = m
                .to_params()
                .ok()
                .map(|tau| kl_divergence(&p, &tau))
                .transpose()?;
            let labels: Vec<_> = (1..=p.n()).map(|i| (i, None)).collect();
            (labels, exact, e.mean()?, m.values().to_vec(), solver, m_div)
        }
        ModelKind::Quantum => {
            let p = model.to_qbm()?;
            let rho = density_matrix(&p)?;
            let exact: Vec<f64> = first_moments(&rho).into_iter().flatten().collect();
            let (e, solver) = e_project_quantum(&p, cfg)?;
            let m = m_project_quantum(&p)?;
            let m_div = match product_state(&m) {
                Ok(tau) => Some(quantum_relative_entropy(&rho, &tau)?),
                Err(_) => None,
            };
            let labels: Vec<_> = (1..=p.n())
                .flat_map(|i| Pauli::ALL.map(|s| (i, Some(s.label()))))
                .collect();
            (labels, exact, e.flat(), m.flat(), solver, m_div)
        }
    };
    Ok(ComparisonReport {
        kind: model.kind,
        n: model.n,
        scale: None,
        rows: rows(&labels, &exact, &e, &m),
        e_divergence: solver.objective,
        solver,
        m_divergence,
        wall_time: Some(start.elapsed().as_secs_f64()),
    })
}

/// Checks that a sweep grid is nonempty, finite and strictly ascending.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite grid point {x}")));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly ascending at {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// [`run_compare`] on `model` with couplings rescaled by each grid point, in grid order.
pub fn run_sweep(model: &ModelFile, grid: &[f64], cfg: &SolverConfig) -> Result<Vec<ComparisonReport>> {
    validate_grid(grid)?;
    cfg.validate()?;
    grid.par_iter()
        .map(|&g| {
            let mut r = run_compare(&model.scale_couplings(g), cfg)?;
            r.scale = Some(g);
            Ok(r)
        })
        .collect()
}

/// Exact log-partition and first moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub kind: ModelKind,
    pub n: usize,
    pub log_partition: f64,
    pub rows: Vec<MomentRow>,
}

/// Mean-field solution without exact reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldReport {
    pub kind: ModelKind,
    pub n: usize,
    pub rows: Vec<MomentRow>,
    pub solver: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub site: usize,
    pub s: Option<u8>,
    pub value: f64,
}

fn moment_rows(kind: ModelKind, values: &[f64]) -> Vec<MomentRow> {
    match kind {
        ModelKind::Classical => values
            .iter()
            .enumerate()
            .map(|(i, &value)| MomentRow { site: i + 1, s: None, value })
            .collect(),
        ModelKind::Quantum => values
            .iter()
            .enumerate()
            .map(|(k, &value)| MomentRow {
                site: k / 3 + 1,
                s: Some(k as u8 % 3 + 1),
                value,
            })
            .collect(),
    }
}

pub fn run_exact(model: &ModelFile) -> Result<ExactReport> {
    let (psi, m) = match model.kind {
        ModelKind::Classical => {
            let p = model.to_cbm()?;
            (
                cbm::log_partition_classical(&p)?,
                exact_moments_classical(&p)?.m().to_vec(),
            )
        }
        ModelKind::Quantum => {
            let p = model.to_qbm()?;
            let rho = density_matrix(&p)?;
            (
                crate::qbm::log_partition_quantum(&p),
                first_moments(&rho).into_iter().flatten().collect(),
            )
        }
    };
    Ok(ExactReport {
        kind: model.kind,
        n: model.n,
        log_partition: psi,
        rows: moment_rows(model.kind, &m),
    })
}

pub fn run_meanfield(model: &ModelFile, cfg: &SolverConfig) -> Result<MeanFieldReport> {
    let (m, solver) = match model.kind {
        ModelKind::Classical => {
            let (c, r): (ProductCoords, _) = e_project_classical(&model.to_cbm()?, cfg)?;
            (c.mean()?, r)
        }
        ModelKind::Quantum => {
            let (c, r): (QProductCoords, _) = e_project_quantum(&model.to_qbm()?, cfg)?;
            (c.flat(), r)
        }
    };
    Ok(MeanFieldReport {
        kind: model.kind,
        n: model.n,
        rows: moment_rows(model.kind, &m),
        solver,
    })
}

/// Report encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Comma-separated rows preceded by `# key: value` comment lines.
    Csv,
    /// A single JSON document.
    Doc,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "doc" => Ok(Format::Doc),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:?}"))
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn header(out: &mut String, meta: &BTreeMap<String, String>) {
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct SweepRow {
    scale: Option<f64>,
    site: usize,
    s: Option<u8>,
    exact: f64,
    e_proj: f64,
    m_proj: f64,
    e_abs_err: f64,
    m_abs_err: f64,
    converged: bool,
    iterations: usize,
    residual: f64,
    e_divergence: Option<f64>,
    m_divergence: Option<f64>,
}

/// Encodes comparison reports.  A single report is written with its solver
/// fields as comment lines; several reports (a sweep) as one table with
/// per-row solver columns.
pub fn write_reports(
    reports: &[ComparisonReport],
    meta: &BTreeMap<String, String>,
    format: Format,
) -> Result<String> {
    match format {
        Format::Doc => {
            #[derive(Serialize)]
            struct Doc<'a> {
                metadata: &'a BTreeMap<String, String>,
                reports: &'a [ComparisonReport],
            }
            json(&Doc { metadata: meta, reports })
        }
        Format::Csv if reports.len() == 1 => {
            let r = &reports[0];
            let mut out = String::new();
            header(&mut out, meta);
            let _ = writeln!(out, "# kind: {}", r.kind.name());
            let _ = writeln!(out, "# n: {}", r.n);
            let _ = writeln!(out, "# converged: {}", r.solver.converged);
            let _ = writeln!(out, "# iterations: {}", r.solver.iterations);
            let _ = writeln!(out, "# residual: {:?}", r.solver.residual);
            let _ = writeln!(out, "# e_divergence: {}", opt(r.e_divergence));
            let _ = writeln!(out, "# m_divergence: {}", opt(r.m_divergence));
            if let Some(t) = r.wall_time {
                let _ = writeln!(out, "# wall_time: {t:?}");
            }
            out.push_str(&csv_rows(&r.rows)?);
            Ok(out)
        }
        Format::Csv => {
            let mut out = String::new();
            header(&mut out, meta);
            if let Some(r) = reports.first() {
                let _ = writeln!(out, "# kind: {}", r.kind.name());
                let _ = writeln!(out, "# n: {}", r.n);
            }
            for r in reports {
                if let Some(t) = r.wall_time {
                    let _ = writeln!(out, "# wall_time[{}]: {t:?}", opt(r.scale));
                }
            }
            out.push_str(&csv_rows(reports.iter().flat_map(|r| {
                r.rows.iter().map(move |row| SweepRow {
                    scale: r.scale,
                    site: row.site,
                    s: row.s,
                    exact: row.exact,
                    e_proj: row.e_proj,
                    m_proj: row.m_proj,
                    e_abs_err: row.e_abs_err,
                    m_abs_err: row.m_abs_err,
                    converged: r.solver.converged,
                    iterations: r.solver.iterations,
                    residual: r.solver.residual,
                    e_divergence: r.e_divergence,
                    m_divergence: r.m_divergence,
                })
            }))?);
            Ok(out)
        }
    }
}

pub fn write_exact(r: &ExactReport, meta: &BTreeMap<String, String>, format: Format) -> Result<String> {
    match format {
        Format::Doc => json(r),
        Format::Csv => {
            let mut out = String::new();
            header(&mut out, meta);
            let _ = writeln!(out, "# kind: {}", r.kind.name());
            let _ = writeln!(out, "# n: {}", r.n);
            let _ = writeln!(out, "# log_partition: {:?}", r.log_partition);
            out.push_str(&csv_rows(&r.rows)?);
            Ok(out)
        }
    }
}

pub fn write_meanfield(r: &MeanFieldReport, meta: &BTreeMap<String, String>, format: Format) -> Result<String> {
    match format {
        Format::Doc => json(r),
        Format::Csv => {
            let mut out = String::new();
            header(&mut out, meta);
            let _ = writeln!(out, "# kind: {}", r.kind.name());
            let _ = writeln!(out, "# n: {}", r.n);
            let _ = writeln!(out, "# converged: {}", r.solver.converged);
            let _ = writeln!(out, "# iterations: {}", r.solver.iterations);
            let _ = writeln!(out, "# residual: {:?}", r.solver.residual);
            let _ = writeln!(out, "# divergence: {}", opt(r.solver.objective));
            out.push_str(&csv_rows(&r.rows)?);
            Ok(out)
        }
    }
}
