//! Experiment configuration: a plain-text format with bracketed sections and
//! `key = value` lines.
//!
//! ```text
//! [problem]
//! name = uniform-f
//! K = 3
//! generator = entropy
//! f2 = "1 + 0.5*sin(3.14159*x1)"   # coefficient override
//!
//! [grid]
//! nodes = 201
//!
//! [sweep]
//! eps = 0.4, 0.2, 0.1, 0.05, 0.025
//! ```
//!
//! Unknown sections or keys are hard errors. Omitted keys take the
//! documented defaults. `serialize` emits a canonical form that parses back
//! to an identical config.

use std::collections::BTreeMap;

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::model::{constant, ActionModel, BoxDomain, PerturbationSpec, ScalarField};
use crate::problems;
use crate::smoothmax::{GeneratorKind, SmoothMaxFamily};
use crate::solver::SolverOptions;

/// A full experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Builtin problem name, or `custom`.
    pub problem: String,
    pub dim: usize,
    pub num_actions: usize,
    pub generator: GeneratorKind,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub nu: f64,
    /// Coefficient expression overrides, keyed like `a1`, `a1_12`, `b2`,
    /// `b2_1`, `c1`, `f2`, `g`.
    pub coefficients: BTreeMap<String, String>,
    pub grid_nodes: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub beta: f64,
    pub gap_threshold: f64,
    pub solver: SolverOptions,
    pub t_list: Vec<f64>,
    /// Perturbation-direction expressions, keyed like the coefficients with
    /// a `d` prefix (`df2`, `da1`, `dg`, ...).
    pub deltas: BTreeMap<String, String>,
    pub mc_paths: usize,
    pub mc_dt: f64,
    pub mc_x0: Vec<f64>,
    pub out_dir: String,
    pub seed: u64,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: "uniform-f".into(),
            dim: 1,
            num_actions: 3,
            generator: GeneratorKind::Entropy,
            domain_lo: vec![0.0],
            domain_hi: vec![1.0],
            nu: 2.0,
            coefficients: BTreeMap::new(),
            grid_nodes: vec![101],
            eps_list: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            beta: 0.5,
            gap_threshold: 0.5,
            solver: SolverOptions::default(),
            t_list: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            deltas: BTreeMap::new(),
            mc_paths: 10_000,
            mc_dt: 1e-4,
            mc_x0: vec![0.5],
            out_dir: "out".into(),
            seed: 42,
            threads: 1,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list_f64(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse().map_err(|_| Error::ConfigValidation {
        key: key.into(),
        message: format!("`{v}` is not a number"),
    })
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.trim().parse().map_err(|_| Error::ConfigValidation {
        key: key.into(),
        message: format!("`{v}` is not a nonnegative integer"),
    })
}

fn parse_list_f64(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|p| parse_f64(key, p))
        .collect::<Result<Vec<_>>>()
}

fn parse_list_usize(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|p| {
            p.trim().parse().map_err(|_| Error::ConfigValidation {
                key: key.into(),
                message: format!("`{p}` is not a positive integer"),
            })
        })
        .collect()
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

// Is `key` a legal coefficient name for this dimension/action count?
// Accepts a<k>, b<k>, c<k>, f<k>, g in 1-D and a<k>_{11,12,22}, b<k>_{1,2},
// c<k>, f<k>, g in 2-D.
fn coefficient_slot(key: &str, dim: usize, num_actions: usize) -> Option<()> {
    if key == "g" {
        return Some(());
    }
    let (head, suffix) = match key.split_once('_') {
        Some((h, s)) => (h, Some(s)),
        None => (key, None),
    };
    let mut chars = head.chars();
    let kind = chars.next()?;
    let action: usize = chars.as_str().parse().ok()?;
    if action < 1 || action > num_actions {
        return None;
    }
    match (kind, dim, suffix) {
        ('a', 1, None) | ('b', 1, None) => Some(()),
        ('a', 2, Some("11" | "12" | "22")) => Some(()),
        ('b', 2, Some("1" | "2")) => Some(()),
        ('c' | 'f', _, None) => Some(()),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Parses a config from text; see the module docs for the format.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut explicit_dim: Option<usize> = None;
        let mut explicit_k: Option<usize> = None;
        let mut explicit_domain: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut explicit_nu: Option<f64> = None;
        let mut explicit_x0: Option<Vec<f64>> = None;
        let mut raw_coeffs: Vec<(usize, String, String)> = Vec::new();
        let mut raw_deltas: Vec<(usize, String, String)> = Vec::new();
        let mut section = String::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::ConfigParse {
                    line,
                    message: "unterminated section header".into(),
                })?;
                match name {
                    "problem" | "grid" | "solver" | "sweep" | "perturbation" | "mc" | "output" => {
                        section = name.to_string()
                    }
                    other => {
                        return Err(Error::ConfigParse {
                            line,
                            message: format!("unknown section `[{other}]`"),
                        })
                    }
                }
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(Error::ConfigParse {
                line,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            match (section.as_str(), key) {
                ("problem", "name") => cfg.problem = value.to_string(),
                ("problem", "K") => {
                    explicit_k = Some(parse_u64(key, value)? as usize);
                }
                ("problem", "n") => explicit_dim = Some(parse_u64(key, value)? as usize),
                ("problem", "generator") => {
                    cfg.generator = match value {
                        "max" => GeneratorKind::Max,
                        "entropy" => GeneratorKind::Entropy,
                        "chks" => GeneratorKind::Chks,
                        "zang" => GeneratorKind::Zang,
                        other => {
                            return Err(Error::ConfigParse {
                                line,
                                message: format!(
                                    "unknown generator `{other}` \
                                     (expected max, entropy, chks or zang)"
                                ),
                            })
                        }
                    }
                }
                ("problem", "domain") => {
                    let mut lo = Vec::new();
                    let mut hi = Vec::new();
                    for axis in value.split(';') {
                        let ends = parse_list_f64("problem.domain", axis)?;
                        if ends.len() != 2 {
                            return Err(Error::ConfigParse {
                                line,
                                message: "domain axes must be `lo, hi`".into(),
                            });
                        }
                        lo.push(ends[0]);
                        hi.push(ends[1]);
                    }
                    explicit_domain = Some((lo, hi));
                }
                ("problem", "nu") => explicit_nu = Some(parse_f64(key, value)?),
                ("problem", other) => {
                    raw_coeffs.push((line, other.to_string(), unquote(value).to_string()));
                }
                ("grid", "nodes") => cfg.grid_nodes = parse_list_usize(key, value)?,
                ("solver", "tolerance") => cfg.solver.tolerance = parse_f64(key, value)?,
                ("solver", "max_iterations") => {
                    cfg.solver.max_iterations = parse_u64(key, value)? as usize
                }
                ("solver", "tie_tolerance") => cfg.solver.tie_tolerance = parse_f64(key, value)?,
                ("sweep", "eps") => cfg.eps_list = parse_list_f64(key, value)?,
                ("sweep", "beta") => cfg.beta = parse_f64(key, value)?,
                ("sweep", "gap_threshold") => cfg.gap_threshold = parse_f64(key, value)?,
                ("perturbation", "t") => cfg.t_list = parse_list_f64(key, value)?,
                ("perturbation", other) => {
                    raw_deltas.push((line, other.to_string(), unquote(value).to_string()));
                }
                ("mc", "paths") => cfg.mc_paths = parse_u64(key, value)? as usize,
                ("mc", "dt") => cfg.mc_dt = parse_f64(key, value)?,
                ("mc", "x0") => explicit_x0 = Some(parse_list_f64(key, value)?),
                ("output", "dir") => cfg.out_dir = value.to_string(),
                ("output", "seed") => cfg.seed = parse_u64(key, value)?,
                ("output", "threads") => cfg.threads = parse_u64(key, value)? as usize,
                ("", _) => {
                    return Err(Error::ConfigParse {
                        line,
                        message: format!("key `{key}` outside any section"),
                    })
                }
                (sec, other) => {
                    return Err(Error::ConfigParse {
                        line,
                        message: format!("unknown key `{other}` in section `[{sec}]`"),
                    })
                }
            }
        }

        // dimension and action count come from the builtin unless given
        cfg.dim = explicit_dim.unwrap_or(match cfg.problem.as_str() {
            "box-2d" => 2,
            _ => 1,
        });
        cfg.num_actions = explicit_k.unwrap_or(match cfg.problem.as_str() {
            "two-action-gap" | "sign-switch-drift" | "box-2d" => 2,
            _ => 3,
        });
        let (dlo, dhi) = explicit_domain.unwrap_or((vec![0.0; cfg.dim], vec![1.0; cfg.dim]));
        cfg.domain_lo = dlo;
        cfg.domain_hi = dhi;
        cfg.nu = explicit_nu.unwrap_or(match cfg.problem.as_str() {
            "box-2d" => 1.0,
            _ => 2.0,
        });
        if cfg.grid_nodes.len() != cfg.dim && cfg.grid_nodes.len() == 1 {
            cfg.grid_nodes = vec![cfg.grid_nodes[0]; cfg.dim];
        }
        cfg.mc_x0 = explicit_x0.unwrap_or_else(|| {
            cfg.domain_lo
                .iter()
                .zip(&cfg.domain_hi)
                .map(|(l, h)| 0.5 * (l + h))
                .collect()
        });

        for (line, key, value) in raw_coeffs {
            if coefficient_slot(&key, cfg.dim, cfg.num_actions).is_none() {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("unknown key `{key}` in section `[problem]`"),
                });
            }
            Expr::parse(&value, cfg.dim)?;
            cfg.coefficients.insert(key, value);
        }
        for (line, key, value) in raw_deltas {
            let base = key.strip_prefix('d').unwrap_or("");
            if coefficient_slot(base, cfg.dim, cfg.num_actions).is_none() {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("unknown key `{key}` in section `[perturbation]`"),
                });
            }
            Expr::parse(&value, cfg.dim)?;
            cfg.deltas.insert(key, value);
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_file(path: &std::path::Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let fail = |key: &str, message: String| {
            Err(Error::ConfigValidation {
                key: key.into(),
                message,
            })
        };
        if self.problem != "custom" {
            let model = problems::by_name(&self.problem, self.num_actions)?;
            if model.num_actions() != self.num_actions {
                return fail(
                    "problem.K",
                    format!(
                        "problem `{}` has {} actions, config says {}",
                        self.problem,
                        model.num_actions(),
                        self.num_actions
                    ),
                );
            }
            if model.dim != self.dim {
                return fail(
                    "problem.n",
                    format!("problem `{}` is {}-dimensional", self.problem, model.dim),
                );
            }
        }
        if self.num_actions == 0 {
            return fail("problem.K", "need at least one action".into());
        }
        if self.dim == 0 || self.dim > 2 {
            return fail("problem.n", "dimension must be 1 or 2".into());
        }
        if self.eps_list.iter().any(|&e| e < 0.0) {
            return fail("sweep.eps", "entries must be nonnegative".into());
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return fail("sweep.beta", "beta must lie in (0, 1]".into());
        }
        if self.gap_threshold <= 0.0 {
            return fail("sweep.gap_threshold", "must be positive".into());
        }
        if self.grid_nodes.len() != self.dim || self.grid_nodes.iter().any(|&m| m < 3) {
            return fail(
                "grid.nodes",
                format!("need {} counts of at least 3", self.dim),
            );
        }
        if self.solver.tolerance <= 0.0 {
            return fail("solver.tolerance", "must be positive".into());
        }
        if self.nu <= 0.0 {
            return fail("problem.nu", "ellipticity must be positive".into());
        }
        if self.mc_dt <= 0.0 {
            return fail("mc.dt", "time step must be positive".into());
        }
        if self.mc_x0.len() != self.dim {
            return fail("mc.x0", format!("need {} coordinates", self.dim));
        }
        if self.threads == 0 {
            return fail("output.threads", "need at least one thread".into());
        }
        Ok(())
    }

    /// Canonical serialization; `parse(serialize(cfg)) == cfg`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("[problem]\n");
        s.push_str(&format!("name = {}\n", self.problem));
        s.push_str(&format!("n = {}\n", self.dim));
        s.push_str(&format!("K = {}\n", self.num_actions));
        s.push_str(&format!("generator = {}\n", self.generator.name()));
        let domain = (0..self.dim)
            .map(|a| {
                format!(
                    "{}, {}",
                    fmt_f64(self.domain_lo[a]),
                    fmt_f64(self.domain_hi[a])
                )
            })
            .collect::<Vec<_>>()
            .join(" ; ");
        s.push_str(&format!("domain = {domain}\n"));
        s.push_str(&format!("nu = {}\n", fmt_f64(self.nu)));
        for (k, v) in &self.coefficients {
            s.push_str(&format!("{k} = \"{v}\"\n"));
        }
        s.push_str("\n[grid]\n");
        let nodes = self
            .grid_nodes
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        s.push_str(&format!("nodes = {nodes}\n"));
        s.push_str("\n[solver]\n");
        s.push_str(&format!("tolerance = {}\n", fmt_f64(self.solver.tolerance)));
        s.push_str(&format!(
            "max_iterations = {}\n",
            self.solver.max_iterations
        ));
        s.push_str(&format!(
            "tie_tolerance = {}\n",
            fmt_f64(self.solver.tie_tolerance)
        ));
        s.push_str("\n[sweep]\n");
        s.push_str(&format!("eps = {}\n", fmt_list_f64(&self.eps_list)));
        s.push_str(&format!("beta = {}\n", fmt_f64(self.beta)));
        s.push_str(&format!(
            "gap_threshold = {}\n",
            fmt_f64(self.gap_threshold)
        ));
        s.push_str("\n[perturbation]\n");
        s.push_str(&format!("t = {}\n", fmt_list_f64(&self.t_list)));
        for (k, v) in &self.deltas {
            s.push_str(&format!("{k} = \"{v}\"\n"));
        }
        s.push_str("\n[mc]\n");
        s.push_str(&format!("paths = {}\n", self.mc_paths));
        s.push_str(&format!("dt = {}\n", fmt_f64(self.mc_dt)));
        s.push_str(&format!("x0 = {}\n", fmt_list_f64(&self.mc_x0)));
        s.push_str("\n[output]\n");
        s.push_str(&format!("dir = {}\n", self.out_dir));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("threads = {}\n", self.threads));
        s
    }

    /// FNV-1a hash of the canonical serialization.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.serialize().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }

    fn field_from_key(&self, key: &str) -> Result<Option<ScalarField>> {
        match self.coefficients.get(key) {
            Some(src) => Ok(Some(Expr::parse(src, self.dim)?.into_field())),
            None => Ok(None),
        }
    }

    /// Materializes the coefficient bundle (builtin plus overrides, or a
    /// fully custom model).
    pub fn build_model(&self) -> Result<ActionModel> {
        let mut model = if self.problem == "custom" {
            // neutral defaults: unit diagonal diffusion, no drift/discount
            let diag = |i: usize, j: usize| {
                if i == j {
                    constant(1.0)
                } else {
                    constant(0.0)
                }
            };
            let action = || crate::model::ActionCoefficients {
                diffusion: {
                    let mut v = Vec::new();
                    for i in 0..self.dim {
                        for j in i..self.dim {
                            v.push(diag(i, j));
                        }
                    }
                    v
                },
                drift: (0..self.dim).map(|_| constant(0.0)).collect(),
                discount: constant(0.0),
                reward: constant(0.0),
            };
            ActionModel {
                dim: self.dim,
                domain: BoxDomain::new(self.domain_lo.clone(), self.domain_hi.clone())?,
                ellipticity: self.nu,
                actions: (0..self.num_actions).map(|_| action()).collect(),
                exit_reward: constant(0.0),
            }
        } else {
            let mut m = problems::by_name(&self.problem, self.num_actions)?;
            m.ellipticity = self.nu;
            m
        };

        // apply expression overrides
        for k in 1..=self.num_actions {
            let a = &mut model.actions[k - 1];
            if self.dim == 1 {
                if let Some(f) = self.field_from_key(&format!("a{k}"))? {
                    a.diffusion[0] = f;
                }
                if let Some(f) = self.field_from_key(&format!("b{k}"))? {
                    a.drift[0] = f;
                }
            } else {
                for (slot, suffix) in ["11", "12", "22"].iter().enumerate() {
                    if let Some(f) = self.field_from_key(&format!("a{k}_{suffix}"))? {
                        a.diffusion[slot] = f;
                    }
                }
                for axis in 0..2 {
                    if let Some(f) = self.field_from_key(&format!("b{k}_{}", axis + 1))? {
                        a.drift[axis] = f;
                    }
                }
            }
            if let Some(f) = self.field_from_key(&format!("c{k}"))? {
                a.discount = f;
            }
            if let Some(f) = self.field_from_key(&format!("f{k}"))? {
                a.reward = f;
            }
        }
        if let Some(f) = self.field_from_key("g")? {
            model.exit_reward = f;
        }
        Ok(model)
    }

    pub fn build_family(&self) -> Result<SmoothMaxFamily> {
        SmoothMaxFamily::new(self.generator, self.num_actions)
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let domain = BoxDomain::new(self.domain_lo.clone(), self.domain_hi.clone())?;
        Grid::build(&domain, &self.grid_nodes)
    }

    /// Materializes the perturbation direction from the `d`-prefixed keys.
    pub fn build_perturbation(&self) -> Result<PerturbationSpec> {
        let mut spec = PerturbationSpec::zero(self.dim, self.num_actions);
        for (key, src) in &self.deltas {
            let field = Expr::parse(src, self.dim)?.into_field();
            let base = &key[1..];
            if base == "g" {
                spec.exit_reward = field;
                continue;
            }
            let (head, suffix) = match base.split_once('_') {
                Some((h, s)) => (h, Some(s)),
                None => (base, None),
            };
            let kind = head.chars().next().unwrap();
            let k: usize = head[1..].parse().unwrap();
            let a = &mut spec.actions[k - 1];
            match (kind, suffix) {
                ('a', None) => a.diffusion[0] = field,
                ('a', Some("11")) => a.diffusion[0] = field,
                ('a', Some("12")) => a.diffusion[1] = field,
                ('a', Some("22")) => a.diffusion[2] = field,
                ('b', None) => a.drift[0] = field,
                ('b', Some("1")) => a.drift[0] = field,
                ('b', Some("2")) => a.drift[1] = field,
                ('c', _) => a.discount = field,
                ('f', _) => a.reward = field,
                _ => unreachable!("validated at parse time"),
            }
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg =
            ExperimentConfig::parse("[problem]\nname = uniform-f\nK = 3\n\n[grid]\nnodes = 101\n")
                .unwrap();
        assert_eq!(cfg.eps_list, vec![0.4, 0.2, 0.1, 0.05, 0.025]);
        assert_eq!(cfg.beta, 0.5);
        assert_eq!(cfg.solver.tolerance, 1e-10);
        assert_eq!(cfg.mc_x0, vec![0.5]);
        assert_eq!(cfg.dim, 1);
    }

    #[test]
    fn negative_eps_rejected() {
        let err = ExperimentConfig::parse("[sweep]\neps = -1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigValidation { .. }));
    }

    #[test]
    #[allow(clippy::approx_constant)] // the literal is the documented example
    fn inline_expression_overrides_builtin() {
        let cfg = ExperimentConfig::parse(
            "[problem]\nname = uniform-f\nK = 3\nf2 = \"1 + 0.5*sin(3.14159*x1)\"\n",
        )
        .unwrap();
        let model = cfg.build_model().unwrap();
        let grid = cfg.build_grid().unwrap();
        for node in 0..grid.num_nodes() {
            let x = grid.coords(node);
            let v = model.reward_at(1, &x);
            assert!((v - (1.0 + 0.5 * (3.14159f64 * x[0]).sin())).abs() < 1e-15);
            assert_eq!(model.reward_at(0, &x), 1.0);
        }
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let err = ExperimentConfig::parse("[problem]\nbogus = 1\n").unwrap_err();
        match err {
            Error::ConfigParse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("bogus"));
            }
            other => panic!("unexpected {other}"),
        }
        assert!(ExperimentConfig::parse("[nope]\n").is_err());
        assert!(ExperimentConfig::parse("key = 1\n").is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = ExperimentConfig {
            problem: "sign-switch-drift".into(),
            num_actions: 2,
            generator: GeneratorKind::Zang,
            eps_list: vec![0.3, 0.15],
            seed: 777,
            ..ExperimentConfig::default()
        };
        cfg.deltas.insert("df2".into(), "1".into());
        cfg.coefficients.insert("f1".into(), "x1 - 0.5".into());
        let text = cfg.serialize();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn custom_problem_from_scratch() {
        let cfg = ExperimentConfig::parse(
            "[problem]\nname = custom\nn = 1\nK = 2\nnu = 2\n\
             f1 = \"1\"\nf2 = \"x1\"\ng = \"0.5\"\n",
        )
        .unwrap();
        let model = cfg.build_model().unwrap();
        assert_eq!(model.reward_at(0, &[0.3]), 1.0);
        assert_eq!(model.reward_at(1, &[0.3]), 0.3);
        assert_eq!(model.exit_reward_at(&[0.0]), 0.5);
    }

    #[test]
    fn perturbation_direction_built_from_deltas() {
        let mut cfg = ExperimentConfig {
            num_actions: 2,
            ..ExperimentConfig::default()
        };
        cfg.deltas.insert("df2".into(), "1".into());
        let spec = cfg.build_perturbation().unwrap();
        assert_eq!((spec.actions[1].reward)(&[0.3]), 1.0);
        assert_eq!((spec.actions[0].reward)(&[0.3]), 0.0);
    }
}
