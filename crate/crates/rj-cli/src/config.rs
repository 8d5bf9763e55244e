//! Flat key-value config files with bracketed sections, and the echo block
//! that makes every run reproducible from its own output.

use num_complex::Complex64 as C64;

use rj_core::analysis::{GammaRule, JunctionTemplate, SweepParameter, SystemKind};
use rj_core::model::{
    build_single_site_junction, build_two_site_interference_junction, discretize_lead_chain,
    FermiParameters, GammaPolicy, JunctionModel, Lead, LeadLabel, Method, ReservoirMode,
};
use rj_core::quadrature::QuadratureConfig;

use crate::error::{CliError, CliResult};

/// One lead, either as a chain recipe or as explicit modes.
#[derive(Debug, Clone, PartialEq)]
pub enum LeadSpec {
    Chain { n: usize, t_hop: f64, v0: f64, policy: GammaPolicy },
    Modes(Vec<ReservoirMode>),
}

impl LeadSpec {
    fn build(&self, label: LeadLabel, n_sites: usize) -> CliResult<Lead> {
        match self {
            LeadSpec::Chain { n, t_hop, v0, policy } => Ok(discretize_lead_chain(
                *n,
                *t_hop,
                C64::new(*v0, 0.0),
                *policy,
                label,
                n_sites,
                0,
            )?),
            LeadSpec::Modes(modes) => Ok(Lead::new(modes.clone(), label)?),
        }
    }
}

/// The junction half of a run: system block plus two lead specs.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSpec {
    pub kind: SystemKind,
    pub lead_l: LeadSpec,
    pub lead_r: LeadSpec,
}

impl JunctionSpec {
    pub fn build(&self) -> CliResult<JunctionModel> {
        let n_sites = self.kind.site_count();
        let l = self.lead_l.build(LeadLabel::Left, n_sites)?;
        let r = self.lead_r.build(LeadLabel::Right, n_sites)?;
        Ok(match self.kind {
            SystemKind::SingleSite { eps0 } => build_single_site_junction(eps0, l, r)?,
            SystemKind::TwoSiteInterference { eps1, eps2, h12 } => {
                build_two_site_interference_junction(eps1, eps2, h12, l, r)?
            }
        })
    }

    /// Rebuildable template; requires both leads to be the same chain recipe.
    pub fn template(&self) -> CliResult<JunctionTemplate> {
        match (&self.lead_l, &self.lead_r) {
            (LeadSpec::Chain { n, t_hop, v0, policy }, r) if r == &self.lead_l => {
                Ok(JunctionTemplate {
                    kind: self.kind,
                    n: *n,
                    t_hop: *t_hop,
                    v0: C64::new(*v0, 0.0),
                    gamma_policy: *policy,
                })
            }
            _ => Err(CliError::usage(
                "this run mode needs identical chain leads (matching [lead_L] and [lead_R] chain keys)",
            )),
        }
    }
}

/// What the run computes; exactly one mode per config.
#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    Current { methods: Vec<Method> },
    Validate,
    Sweep { parameter: SweepParameter, values: Vec<f64>, methods: Vec<Method> },
    Converge { sizes: Vec<usize>, rule: GammaRule },
}

impl RunMode {
    pub fn name(&self) -> &'static str {
        match self {
            RunMode::Current { .. } => "current",
            RunMode::Validate => "validate",
            RunMode::Sweep { .. } => "sweep",
            RunMode::Converge { .. } => "converge",
        }
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub junction: JunctionSpec,
    pub fermi: FermiParameters,
    pub quadrature: QuadratureConfig,
    pub mode: RunMode,
}

struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct Entries(Vec<Entry>);

impl Entries {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.0.iter().find(|e| {
            if e.section == section && e.key == key {
                e.used.set(true);
                true
            } else {
                false
            }
        })
    }

    fn require(&self, section: &str, key: &str) -> CliResult<&Entry> {
        self.get(section, key)
            .ok_or_else(|| CliError::parse_plain(format!("missing required key {key} in [{section}]")))
    }

    fn f64(&self, section: &str, key: &str) -> CliResult<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::parse(e.line, format!("{key} expects a number, got '{}'", e.value))),
        }
    }

    fn require_f64(&self, section: &str, key: &str) -> CliResult<f64> {
        self.require(section, key)?;
        Ok(self.f64(section, key)?.unwrap())
    }

    fn usize(&self, section: &str, key: &str) -> CliResult<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<usize>().map(Some).map_err(|_| {
                CliError::parse(e.line, format!("{key} expects a non-negative integer, got '{}'", e.value))
            }),
        }
    }
}

const SECTIONS: [&str; 6] = ["system", "lead_L", "lead_R", "fermi", "quadrature", "run"];

const KEYS: [(&str, &[&str]); 6] = [
    ("system", &["kind", "eps0", "eps1", "eps2", "h12_re", "h12_im"]),
    ("lead_L", &["n", "t_hop", "v0", "gamma", "gamma_spacing", "modes"]),
    ("lead_R", &["n", "t_hop", "v0", "gamma", "gamma_spacing", "modes"]),
    ("fermi", &["mu_L", "mu_R", "T"]),
    ("quadrature", &["rel_tol", "abs_tol", "window_pad", "max_panels", "split_at_poles"]),
    (
        "run",
        &["mode", "methods", "sweep_parameter", "sweep_values", "converge_sizes", "gamma_rule"],
    ),
];

fn tokenize(text: &str) -> CliResult<Entries> {
    let mut entries = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if !SECTIONS.contains(&name) {
                return Err(CliError::parse(line_no, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::parse(line_no, format!("expected 'key = value', got '{line}'")));
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let Some(section) = section.clone() else {
            return Err(CliError::parse(line_no, format!("key {key} appears before any [section]")));
        };
        let allowed = KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap();
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::parse(line_no, format!("unknown key {key} in [{section}]")));
        }
        if entries.iter().any(|e: &Entry| e.section == section && e.key == key) {
            return Err(CliError::parse(line_no, format!("duplicate key {key} in [{section}]")));
        }
        entries.push(Entry { section, key, value, line: line_no, used: std::cell::Cell::new(false) });
    }
    Ok(Entries(entries))
}

/// Parses and validates a config, starting from the given quadrature defaults
/// (so an environment-supplied tolerance can sit below explicit keys).
pub fn parse_config_with(text: &str, quadrature_defaults: &QuadratureConfig) -> CliResult<RunConfig> {
    let entries = tokenize(text)?;

    let kind = parse_system(&entries)?;
    let lead_l = parse_lead(&entries, "lead_L")?;
    let lead_r = parse_lead(&entries, "lead_R")?;
    let fermi = FermiParameters::new(
        entries.require_f64("fermi", "mu_L")?,
        entries.require_f64("fermi", "mu_R")?,
        entries.require_f64("fermi", "T")?,
    )?;
    let quadrature = parse_quadrature(&entries, quadrature_defaults)?;
    let mode = parse_run(&entries)?;

    // every entry must belong to the declared mode and system kind
    for e in &entries.0 {
        if !e.used.get() {
            return Err(CliError::parse(
                e.line,
                format!("key {} in [{}] does not apply to this configuration", e.key, e.section),
            ));
        }
    }

    let config = RunConfig { junction: JunctionSpec { kind, lead_l, lead_r }, fermi, quadrature, mode };
    config.junction.build()?; // surface model errors at parse time
    if let RunMode::Sweep { parameter, values, methods } = &config.mode {
        let spec = rj_core::analysis::SweepSpec {
            parameter: *parameter,
            values: values.clone(),
            methods: methods.clone(),
            template: config.junction.template()?,
            fermi: config.fermi,
            quadrature: config.quadrature.clone(),
        };
        spec.validate()?;
    }
    if let RunMode::Converge { sizes, rule } = &config.mode {
        config.junction.template()?;
        if sizes.is_empty() || !sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::usage("converge_sizes must be a strictly increasing list"));
        }
        rule.policy(sizes[0])?;
    }
    Ok(config)
}

/// Parses with the built-in quadrature defaults.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    parse_config_with(text, &QuadratureConfig::default())
}

fn parse_system(entries: &Entries) -> CliResult<SystemKind> {
    let kind = entries.require("system", "kind")?;
    match kind.value.as_str() {
        "single_site" => Ok(SystemKind::SingleSite {
            eps0: entries.f64("system", "eps0")?.unwrap_or(0.0),
        }),
        "two_site_interference" => Ok(SystemKind::TwoSiteInterference {
            eps1: entries.f64("system", "eps1")?.unwrap_or(0.0),
            eps2: entries.f64("system", "eps2")?.unwrap_or(0.0),
            h12: C64::new(
                entries.f64("system", "h12_re")?.unwrap_or(0.0),
                entries.f64("system", "h12_im")?.unwrap_or(0.0),
            ),
        }),
        other => Err(CliError::parse(kind.line, format!("unknown system kind '{other}'"))),
    }
}

fn parse_lead(entries: &Entries, section: &str) -> CliResult<LeadSpec> {
    if let Some(modes_entry) = entries.get(section, "modes") {
        for key in ["n", "t_hop", "v0", "gamma", "gamma_spacing"] {
            if entries.get(section, key).is_some() {
                return Err(CliError::parse(
                    modes_entry.line,
                    format!("[{section}] mixes explicit modes with chain key {key}"),
                ));
            }
        }
        let mut modes = Vec::new();
        for part in modes_entry.value.split(';') {
            let nums: Vec<f64> = part
                .split(':')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| {
                    CliError::parse(modes_entry.line, format!("bad mode entry '{part}' in [{section}]"))
                })?;
            if nums.len() < 4 || nums.len() % 2 != 0 {
                return Err(CliError::parse(
                    modes_entry.line,
                    format!("mode entries are omega:gamma:re:im[:re:im...], got '{part}'"),
                ));
            }
            let coupling = nums[2..].chunks(2).map(|c| C64::new(c[0], c[1])).collect();
            modes.push(ReservoirMode::new(nums[0], nums[1], coupling)?);
        }
        return Ok(LeadSpec::Modes(modes));
    }

    let n = entries.usize(section, "n")?.ok_or_else(|| {
        CliError::parse_plain(format!("[{section}] needs either chain keys (n, ...) or modes"))
    })?;
    let gamma = entries.f64(section, "gamma")?;
    let gamma_spacing = entries.f64(section, "gamma_spacing")?;
    let policy = match (gamma, gamma_spacing) {
        (Some(g), None) => {
            if !(g > 0.0) {
                let line = entries.get(section, "gamma").unwrap().line;
                return Err(CliError::parse(line, format!("gamma must be > 0, got {g}")));
            }
            GammaPolicy::Uniform(g)
        }
        (None, Some(c)) => {
            if !(c > 0.0) {
                let line = entries.get(section, "gamma_spacing").unwrap().line;
                return Err(CliError::parse(line, format!("gamma_spacing must be > 0, got {c}")));
            }
            GammaPolicy::ProportionalToSpacing(c)
        }
        _ => {
            return Err(CliError::parse_plain(format!(
                "[{section}] needs exactly one of gamma, gamma_spacing"
            )));
        }
    };
    Ok(LeadSpec::Chain {
        n,
        t_hop: entries.f64(section, "t_hop")?.unwrap_or(1.0),
        v0: entries.require_f64(section, "v0")?,
        policy,
    })
}

fn parse_quadrature(entries: &Entries, defaults: &QuadratureConfig) -> CliResult<QuadratureConfig> {
    let mut config = defaults.clone();
    if let Some(v) = entries.f64("quadrature", "rel_tol")? {
        config.rel_tol = v;
    }
    if let Some(v) = entries.f64("quadrature", "abs_tol")? {
        config.abs_tol = v;
    }
    if let Some(v) = entries.f64("quadrature", "window_pad")? {
        config.window_pad = v;
    }
    if let Some(v) = entries.usize("quadrature", "max_panels")? {
        config.max_panels = v;
    }
    if let Some(e) = entries.get("quadrature", "split_at_poles") {
        config.split_at_poles = match e.value.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(CliError::parse(e.line, format!("split_at_poles expects true/false, got '{other}'")));
            }
        };
    }
    config.validate()?;
    Ok(config)
}

fn parse_methods(entries: &Entries) -> CliResult<Vec<Method>> {
    let e = entries.require("run", "methods")?;
    let mut methods = Vec::new();
    for name in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = Method::from_name(name)
            .ok_or_else(|| CliError::parse(e.line, format!("unknown method '{name}'")))?;
        if methods.contains(&m) {
            return Err(CliError::parse(e.line, format!("method '{name}' listed twice")));
        }
        methods.push(m);
    }
    if methods.is_empty() {
        return Err(CliError::parse(e.line, "methods list is empty".into()));
    }
    Ok(methods)
}

fn parse_run(entries: &Entries) -> CliResult<RunMode> {
    let mode = entries.require("run", "mode")?;
    match mode.value.as_str() {
        "current" => Ok(RunMode::Current { methods: parse_methods(entries)? }),
        "validate" => Ok(RunMode::Validate),
        "sweep" => {
            let p = entries.require("run", "sweep_parameter")?;
            let parameter = SweepParameter::from_name(&p.value)
                .ok_or_else(|| CliError::parse(p.line, format!("unknown sweep parameter '{}'", p.value)))?;
            let v = entries.require("run", "sweep_values")?;
            let values = v
                .value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::parse(v.line, format!("sweep_values expects numbers, got '{}'", v.value)))?;
            Ok(RunMode::Sweep { parameter, values, methods: parse_methods(entries)? })
        }
        "converge" => {
            let s = entries.require("run", "converge_sizes")?;
            let sizes = s
                .value
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::parse(s.line, format!("converge_sizes expects integers, got '{}'", s.value)))?;
            let g = entries.require("run", "gamma_rule")?;
            let rule = parse_gamma_rule(&g.value)
                .ok_or_else(|| CliError::parse(g.line, format!("unknown gamma_rule '{}'", g.value)))?;
            Ok(RunMode::Converge { sizes, rule })
        }
        other => Err(CliError::parse(mode.line, format!("unknown run mode '{other}'"))),
    }
}

fn parse_gamma_rule(text: &str) -> Option<GammaRule> {
    let (name, value) = text.split_once(':')?;
    let c = value.trim().parse::<f64>().ok()?;
    Some(match name.trim() {
        "constant" => GammaRule::Constant(c),
        "over_size" => GammaRule::OverSize(c),
        "spacing" => GammaRule::SpacingMultiple(c),
        _ => return None,
    })
}

fn format_gamma_rule(rule: &GammaRule) -> String {
    match rule {
        GammaRule::Constant(c) => format!("constant:{c}"),
        GammaRule::OverSize(c) => format!("over_size:{c}"),
        GammaRule::SpacingMultiple(c) => format!("spacing:{c}"),
    }
}

/// Serializes the config back to parseable text, with every default explicit.
/// parse(echo(config)) reproduces the config exactly.
pub fn echo(config: &RunConfig) -> String {
    let mut out = String::new();
    let line = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };

    line(&mut out, "[system]".into());
    match config.junction.kind {
        SystemKind::SingleSite { eps0 } => {
            line(&mut out, "kind = single_site".into());
            line(&mut out, format!("eps0 = {eps0}"));
        }
        SystemKind::TwoSiteInterference { eps1, eps2, h12 } => {
            line(&mut out, "kind = two_site_interference".into());
            line(&mut out, format!("eps1 = {eps1}"));
            line(&mut out, format!("eps2 = {eps2}"));
            line(&mut out, format!("h12_re = {}", h12.re));
            line(&mut out, format!("h12_im = {}", h12.im));
        }
    }

    for (section, lead) in [("lead_L", &config.junction.lead_l), ("lead_R", &config.junction.lead_r)] {
        line(&mut out, format!("[{section}]"));
        match lead {
            LeadSpec::Chain { n, t_hop, v0, policy } => {
                line(&mut out, format!("n = {n}"));
                line(&mut out, format!("t_hop = {t_hop}"));
                line(&mut out, format!("v0 = {v0}"));
                match policy {
                    GammaPolicy::Uniform(g) => line(&mut out, format!("gamma = {g}")),
                    GammaPolicy::ProportionalToSpacing(c) => {
                        line(&mut out, format!("gamma_spacing = {c}"))
                    }
                }
            }
            LeadSpec::Modes(modes) => {
                let parts: Vec<String> = modes
                    .iter()
                    .map(|m| {
                        let mut fields = vec![m.omega.to_string(), m.gamma.to_string()];
                        for v in &m.coupling {
                            fields.push(v.re.to_string());
                            fields.push(v.im.to_string());
                        }
                        fields.join(":")
                    })
                    .collect();
                line(&mut out, format!("modes = {}", parts.join(";")));
            }
        }
    }

    line(&mut out, "[fermi]".into());
    line(&mut out, format!("mu_L = {}", config.fermi.mu_l));
    line(&mut out, format!("mu_R = {}", config.fermi.mu_r));
    line(&mut out, format!("T = {}", config.fermi.temperature));

    line(&mut out, "[quadrature]".into());
    line(&mut out, format!("rel_tol = {}", config.quadrature.rel_tol));
    line(&mut out, format!("abs_tol = {}", config.quadrature.abs_tol));
    line(&mut out, format!("window_pad = {}", config.quadrature.window_pad));
    line(&mut out, format!("max_panels = {}", config.quadrature.max_panels));
    line(&mut out, format!("split_at_poles = {}", config.quadrature.split_at_poles));

    line(&mut out, "[run]".into());
    line(&mut out, format!("mode = {}", config.mode.name()));
    match &config.mode {
        RunMode::Current { methods } => {
            let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
            line(&mut out, format!("methods = {}", names.join(",")));
        }
        RunMode::Validate => {}
        RunMode::Sweep { parameter, values, methods } => {
            line(&mut out, format!("sweep_parameter = {}", parameter.name()));
            let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            line(&mut out, format!("sweep_values = {}", vals.join(",")));
            let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
            line(&mut out, format!("methods = {}", names.join(",")));
        }
        RunMode::Converge { sizes, rule } => {
            let vals: Vec<String> = sizes.iter().map(|v| v.to_string()).collect();
            line(&mut out, format!("converge_sizes = {}", vals.join(",")));
            line(&mut out, format!("gamma_rule = {}", format_gamma_rule(rule)));
        }
    }
    out
}
