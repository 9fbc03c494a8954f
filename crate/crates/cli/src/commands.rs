use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use trendflow::eval::{compare, render_selection};
use trendflow::field::{BasisMode, Domain};
use trendflow::fit::{ds_forecast, ds_walk_forward, fit_frame, select_degree, DsConfig};
use trendflow::integrate::TrajectoryOptions;
use trendflow::numtext::{decode_all, encode_all};
use trendflow::portrait::{
    export_portrait, find_fixed_points, render_svg, trending_check, working_box, FixedPointOptions,
    GridSpec, PortraitOptions,
};
use trendflow::series::{
    csv_headers, load_csv, max_factors, normalize_by_exogenous, rescale, CsvSchema, Rescale,
};
use trendflow::var::{fit_var, select_lag, var_walk_forward, VarOptions};
use trendflow::{Field, Frame, Matrix, Model, Report};

use crate::config::{join, ConfigFile, Effective, SeriesSection};
use crate::{
    Cli, CliError, CliResult, Command, CompareArgs, DsArgs, EvaluateArgs, FitArgs, PortraitArgs,
    PredictArgs, SeriesArgs, TrendingArgs, VarArgs,
};

/// Provenance key holding the per-axis maximum of the scaled training data.
pub const DATA_MAX_KEY: &str = "data.max";

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut eff = Effective::default();
    if let Some(p) = &cli.config {
        eff.set("file", p.display().to_string());
    }
    match cli.command {
        Command::Fit(a) => fit_cmd(a, &cfg, &mut eff, out),
        Command::Evaluate(a) => evaluate_cmd(a, &cfg, &mut eff, out),
        Command::Compare(a) => compare_cmd(a, out),
        Command::Portrait(a) => portrait_cmd(a, &cfg, &mut eff, out),
        Command::Trending(a) => trending_cmd(a, &cfg, &mut eff, out),
        Command::Predict(a) => predict_cmd(a, &cfg, &mut eff, out),
    }
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let fail = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, contents).map_err(fail)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        fail(e)
    })?;
    info!("wrote {}", path.display());
    Ok(())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `1..5` (inclusive), `1..=5`, `1,2,4` or a single number.
pub fn parse_orders(spec: &str, what: &str) -> CliResult<Vec<usize>> {
    let bad = || usage(format!("cannot read {what} '{spec}'; use e.g. 1..5 or 1,2,4"));
    let spec = spec.trim();
    let out: Vec<usize> = if let Some((a, b)) = spec.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: usize = a.trim().parse().map_err(|_| bad())?;
        let hi: usize = b.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(usage(format!("{what} must be positive integers, got '{spec}'")));
    }
    Ok(out)
}

fn pairs(items: &[String], flag: &str) -> CliResult<Vec<(String, String)>> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .filter(|(a, b)| !a.is_empty() && !b.is_empty())
                .ok_or_else(|| usage(format!("{flag} expects VAR=COLUMN, got '{s}'")))
        })
        .collect()
}

fn series_input(args: &SeriesArgs, cfg: &SeriesSection) -> Option<String> {
    args.input
        .as_ref()
        .map(|p| p.display().to_string())
        .or_else(|| cfg.input.clone())
}

/// Loads the CSV named by flags/config and applies exogenous normalization.
fn load_series(args: &SeriesArgs, cfg: &SeriesSection, eff: &mut Effective) -> CliResult<Frame> {
    let input = eff
        .pick_opt("series.input", series_input(args, cfg), None)
        .ok_or_else(|| usage("no input series; pass --input FILE"))?;
    let time_column = eff.pick_opt("series.time_column", args.time_column.clone(), cfg.time_column.clone());
    let dt = eff.pick("series.dt", args.dt, cfg.dt, 1.0);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(usage(format!("--dt must be positive, got {dt}")));
    }
    let normalize = pairs(
        args.normalize.as_deref().or(cfg.normalize.as_deref()).unwrap_or(&[]),
        "--normalize",
    )?;
    let adjust = pairs(args.adjust.as_deref().or(cfg.adjust.as_deref()).unwrap_or(&[]), "--adjust")?;

    let requested = args.columns.clone().or_else(|| cfg.columns.clone()).unwrap_or_default();
    let columns: Vec<(String, String)> = if requested.is_empty() {
        let exo: Vec<&str> = normalize.iter().chain(&adjust).map(|(_, c)| c.as_str()).collect();
        csv_headers(&input)
            .map_err(CliError::input)?
            .into_iter()
            .filter(|h| Some(h) != time_column.as_ref() && !exo.contains(&h.as_str()))
            .map(|h| (h.clone(), h))
            .collect()
    } else {
        requested
            .iter()
            .map(|c| match c.split_once('=') {
                Some((h, n)) => (h.trim().to_string(), n.trim().to_string()),
                None => (c.trim().to_string(), c.trim().to_string()),
            })
            .collect()
    };
    if columns.is_empty() {
        return Err(usage(format!("{input} has no data columns")));
    }
    let spec: Vec<String> = columns
        .iter()
        .map(|(h, n)| if h == n { h.clone() } else { format!("{h}={n}") })
        .collect();
    eff.set("series.columns", join(&spec));

    let schema = CsvSchema {
        time_column: time_column.clone(),
        columns,
        dt,
    };
    let frame: Frame = load_csv(&input, &schema).map_err(|e| match e {
        trendflow::Error::MissingColumn(c) => {
            let available = csv_headers(&input).map(|h| h.join(", ")).unwrap_or_default();
            usage(format!("column '{c}' not found in {input} (available: {available})"))
        }
        other => CliError::input(other),
    })?;
    if normalize.is_empty() && adjust.is_empty() {
        return Ok(frame);
    }
    let exogenous = |list: &[(String, String)]| -> CliResult<BTreeMap<String, Frame>> {
        list.iter()
            .map(|(var, col)| {
                let s = CsvSchema {
                    time_column: time_column.clone(),
                    columns: vec![(col.clone(), col.clone())],
                    dt,
                };
                Ok((var.clone(), load_csv(&input, &s).map_err(CliError::input)?))
            })
            .collect()
    };
    let fmt = |list: &[(String, String)]| list.iter().map(|(a, b)| format!("{a}={b}")).collect::<Vec<_>>();
    if !normalize.is_empty() {
        eff.set("series.normalize", join(&fmt(&normalize)));
    }
    if !adjust.is_empty() {
        eff.set("series.adjust", join(&fmt(&adjust)));
    }
    normalize_by_exogenous(&frame, &exogenous(&normalize)?, &exogenous(&adjust)?).map_err(CliError::input)
}

fn rescale_mode(args: &SeriesArgs, cfg: &SeriesSection, eff: &mut Effective) -> CliResult<Rescale<f64>> {
    let text = eff.pick(
        "series.rescale",
        args.rescale.clone(),
        cfg.rescale.as_ref().map(|f| f.text()),
        "max".to_string(),
    );
    match text.as_str() {
        "max" => Ok(Rescale::Max),
        "none" => Ok(Rescale::None),
        list => list
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Rescale::Explicit)
            .map_err(|_| usage(format!("--rescale expects max, none or factors, got '{list}'"))),
    }
}

/// Max factors come from the first `fit_rows` rows only.
fn apply_rescale(frame: &Frame, mode: &Rescale<f64>, fit_rows: usize) -> CliResult<Frame> {
    let mode = match mode {
        Rescale::Max => Rescale::Explicit(max_factors(&frame.rows_range(0, fit_rows)).map_err(CliError::input)?),
        other => other.clone(),
    };
    rescale(frame, &mode).map_err(CliError::input)
}

fn check_window(rows: usize, test_len: usize) -> CliResult<()> {
    if test_len < 2 || test_len + 3 > rows {
        return Err(usage(format!(
            "--test-len {test_len} does not fit a {rows}-row series (need 2 <= test-len <= {})",
            rows.saturating_sub(3)
        )));
    }
    Ok(())
}

/// Validation window for order selection inside a training frame.
fn inner_window(train_rows: usize, test_len: usize) -> CliResult<usize> {
    let w = test_len.min(train_rows.saturating_sub(3));
    if w < 2 {
        return Err(usage(format!(
            "{train_rows} training rows are too few to select an order; give a fixed order"
        )));
    }
    Ok(w)
}

fn ds_config(a: &DsArgs, cfg: &ConfigFile, eff: &mut Effective) -> CliResult<DsConfig<f64>> {
    let basis: BasisMode = eff
        .pick("fit.basis", a.basis.clone(), cfg.fit.basis.clone(), "full".into())
        .parse()
        .map_err(CliError::input)?;
    let ridge = eff.pick("fit.ridge", a.ridge, cfg.fit.ridge, 0.0);
    let h = eff.pick("fit.h", a.h, cfg.fit.h, 0.01);
    if !(ridge >= 0.0) || !(h > 0.0) {
        return Err(usage("--ridge must be >= 0 and --h positive"));
    }
    let mut c = DsConfig::new(1);
    c.basis = basis;
    c.fit.ridge = ridge;
    c.h = h;
    Ok(c)
}

enum Order {
    Fixed(usize),
    Auto(Vec<usize>),
}

fn order_spec(
    eff: &mut Effective,
    key: &str,
    flag: Option<String>,
    config: Option<String>,
    range_key: &str,
    range_flag: Option<String>,
    range_config: Option<String>,
    default_range: &str,
) -> CliResult<Order> {
    let spec = eff.pick(key, flag, config, "auto".into());
    if spec == "auto" {
        let r = eff.pick(range_key, range_flag, range_config, default_range.into());
        Ok(Order::Auto(parse_orders(&r, range_key)?))
    } else {
        match parse_orders(&spec, key)?.as_slice() {
            [d] => Ok(Order::Fixed(*d)),
            _ => Err(usage(format!("{key} takes one number or auto, got '{spec}'"))),
        }
    }
}

fn degree_spec(a: &DsArgs, cfg: &ConfigFile, eff: &mut Effective) -> CliResult<Order> {
    order_spec(
        eff,
        "fit.degree",
        a.degree.clone(),
        cfg.fit.degree.as_ref().map(|f| f.text()),
        "fit.degrees",
        a.degrees.clone(),
        cfg.fit.degrees.as_ref().map(|f| f.text()),
        "1..5",
    )
}

fn lag_spec(a: &VarArgs, cfg: &ConfigFile, eff: &mut Effective) -> CliResult<(Order, VarOptions)> {
    let order = order_spec(
        eff,
        "var.lag",
        a.lag.clone(),
        cfg.var.lag.as_ref().map(|f| f.text()),
        "var.lags",
        a.lags.clone(),
        cfg.var.lags.as_ref().map(|f| f.text()),
        "1..4",
    )?;
    let intercept = eff.pick("var.intercept", a.no_intercept.then_some(false), cfg.var.intercept, true);
    Ok((order, VarOptions { intercept }))
}

fn data_max(frame: &Frame) -> String {
    let m: Vec<f64> = (0..frame.dim())
        .map(|j| frame.values().column(j).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    encode_all(&m).join(",")
}

fn fit_cmd(a: FitArgs, cfg: &ConfigFile, eff: &mut Effective, out: &mut dyn Write) -> CliResult<()> {
    let raw = load_series(&a.series, &cfg.series, eff)?;
    let mode = rescale_mode(&a.series, &cfg.series, eff)?;
    let frame = apply_rescale(&raw, &mode, raw.len())?;
    let family = eff.pick("fit.model", a.model.clone(), cfg.fit.model.clone(), "ds".into());
    let test_len = eff.pick("fit.test_len", a.test_len, cfg.fit.test_len, 24);
    let mut table = String::new();
    let model = match family.as_str() {
        "ds" => {
            let ds = ds_config(&a.ds, cfg, eff)?;
            let degree = match degree_spec(&a.ds, cfg, eff)? {
                Order::Fixed(d) => d,
                Order::Auto(ds_list) => {
                    check_window(frame.len(), test_len)?;
                    let w = test_len;
                    let degrees: Vec<u32> = ds_list.iter().map(|&d| d as u32).collect();
                    let sel = select_degree(&frame, &degrees, w, &ds)?;
                    table = render_selection("degree", &sel.table, sel.degree as usize);
                    sel.degree as usize
                }
            };
            eff.set("fit.selected_degree", degree.to_string());
            let m = fit_frame(&frame, &DsConfig { degree: degree as u32, ..ds })?;
            let mut m = m.with_provenance(DATA_MAX_KEY, data_max(&frame));
            for (k, v) in eff.provenance() {
                m = m.with_provenance(k, v);
            }
            Model::Poly(m)
        }
        "var" => {
            let (order, opts) = lag_spec(&a.var, cfg, eff)?;
            let p = match order {
                Order::Fixed(p) => p,
                Order::Auto(lags) => {
                    check_window(frame.len(), test_len)?;
                    let w = test_len;
                    let sel = select_lag(&frame, &lags, w, &opts)?;
                    table = render_selection("p", &sel.table, sel.p);
                    sel.p
                }
            };
            eff.set("var.selected_lag", p.to_string());
            let mut m = fit_var(&frame, p, &opts)?.with_provenance(DATA_MAX_KEY, data_max(&frame));
            for (k, v) in eff.provenance() {
                m = m.with_provenance(k, v);
            }
            Model::Var(m)
        }
        other => return Err(usage(format!("--model must be ds or var, got '{other}'"))),
    };
    let text = model.to_json()?;
    match &a.out {
        Some(path) => {
            write!(out, "{table}")?;
            write_atomic(path, &text)?;
            writeln!(out, "wrote {} ({} rows, {} variables)", path.display(), frame.len(), frame.dim())?;
        }
        None => {
            if !table.is_empty() {
                info!("selection:\n{table}");
            }
            write!(out, "{text}")?;
        }
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs, cfg: &ConfigFile, eff: &mut Effective, out: &mut dyn Write) -> CliResult<()> {
    let raw = load_series(&a.series, &cfg.series, eff)?;
    let test_len = eff.pick(
        "evaluate.test_len",
        a.test_len,
        cfg.evaluate.test_len.or(cfg.fit.test_len),
        24,
    );
    check_window(raw.len(), test_len)?;
    let mode = rescale_mode(&a.series, &cfg.series, eff)?;
    let frame = apply_rescale(&raw, &mode, raw.len() - test_len)?;
    let train = frame.rows_range(0, frame.len() - test_len);
    let kind = eff.pick("evaluate.model", a.model.clone(), cfg.evaluate.model.clone(), "ds".into());
    let baseline = eff.pick("evaluate.baseline", a.baseline.clone(), cfg.evaluate.baseline.clone(), "var".into());
    if !matches!(baseline.as_str(), "var" | "none") {
        return Err(usage(format!("--baseline must be var or none, got '{baseline}'")));
    }

    let mut reports: Vec<Report> = Vec::new();
    let var_report = |eff: &mut Effective, out: &mut dyn Write| -> CliResult<Report> {
        let (order, opts) = lag_spec(&a.var, cfg, eff)?;
        let p = match order {
            Order::Fixed(p) => p,
            Order::Auto(lags) => {
                let sel = select_lag(&train, &lags, inner_window(train.len(), test_len)?, &opts)?;
                write!(out, "{}", render_selection("p", &sel.table, sel.p))?;
                sel.p
            }
        };
        eff.set("var.selected_lag", p.to_string());
        Ok(var_walk_forward(&frame, test_len, p, &opts)?)
    };
    match kind.as_str() {
        "ds" => {
            let ds = ds_config(&a.ds, cfg, eff)?;
            let degree = match degree_spec(&a.ds, cfg, eff)? {
                Order::Fixed(d) => d as u32,
                Order::Auto(list) => {
                    let degrees: Vec<u32> = list.iter().map(|&d| d as u32).collect();
                    let sel = select_degree(&train, &degrees, inner_window(train.len(), test_len)?, &ds)?;
                    write!(out, "{}", render_selection("degree", &sel.table, sel.degree as usize))?;
                    sel.degree
                }
            };
            eff.set("fit.selected_degree", degree.to_string());
            reports.push(ds_walk_forward(&frame, test_len, &DsConfig { degree, ..ds })?);
            if baseline == "var" {
                reports.push(var_report(eff, out)?);
            }
        }
        "var" => reports.push(var_report(eff, out)?),
        other => return Err(usage(format!("--model must be ds or var, got '{other}'"))),
    }
    let provenance = eff.provenance();
    for r in &mut reports {
        r.provenance = provenance.clone();
    }
    let table = compare(&reports)?;
    write!(out, "{}", table.render_text())?;
    if let Some(path) = &a.out {
        let mut text = serde_json::to_string_pretty(&reports).map_err(trendflow::Error::from)?;
        text.push('\n');
        write_atomic(path, &text)?;
    }
    if let Some(path) = &a.csv {
        write_atomic(path, &table.to_csv())?;
    }
    Ok(())
}

fn read_reports(path: &Path) -> CliResult<Vec<Report>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: trendflow::Error| usage(format!("{} is not an evaluation report: {e}", path.display()));
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| bad(trendflow::Error::from(e)))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        single => vec![single],
    };
    items.iter().map(|v| Report::from_json(&v.to_string()).map_err(bad)).collect()
}

fn compare_cmd(a: CompareArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut reports = Vec::new();
    for p in &a.reports {
        reports.extend(read_reports(p)?);
    }
    let table = compare(&reports).map_err(CliError::input)?;
    write!(out, "{}", table.render_text())?;
    if let Some(path) = &a.out {
        let mut text = serde_json::to_string_pretty(&table).map_err(trendflow::Error::from)?;
        text.push('\n');
        write_atomic(path, &text)?;
    }
    if let Some(path) = &a.csv {
        write_atomic(path, &table.to_csv())?;
    }
    Ok(())
}

fn load_model(path: &Path) -> CliResult<Model> {
    Model::load(path).map_err(|e| usage(format!("cannot load model {}: {e}", path.display())))
}

fn load_poly(path: &Path) -> CliResult<Field> {
    load_model(path)?
        .into_poly()
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Explicit `lo,hi` pairs, else a bounded model domain, else the working
/// box from the recorded data maximum.
fn resolve_box(
    flag: Option<Vec<f64>>,
    config: Option<Vec<f64>>,
    factor: f64,
    model: &Field,
    eff: &mut Effective,
    section: &str,
) -> CliResult<Domain<f64>> {
    let n = model.dim();
    let given = flag.or(config);
    if let Some(b) = given {
        if b.len() != 2 * n {
            return Err(usage(format!("--box needs {} numbers (lo,hi per variable), got {}", 2 * n, b.len())));
        }
        let lower: Vec<f64> = b.iter().step_by(2).copied().collect();
        let upper: Vec<f64> = b.iter().skip(1).step_by(2).copied().collect();
        let d = Domain::boxed(lower, upper).map_err(|e| usage(format!("--box: {e}")))?;
        eff.set(&format!("{section}.box"), b.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        return Ok(d);
    }
    if model.domain().is_bounded() {
        return Ok(model.domain().clone());
    }
    let max = model
        .provenance()
        .get(DATA_MAX_KEY)
        .ok_or_else(|| usage("the model records no data range; pass --box lo,hi,..."))?;
    let max: Vec<f64> = decode_all(&max.split(',').map(str::to_string).collect::<Vec<_>>())
        .map_err(|e| usage(format!("bad {DATA_MAX_KEY} in model: {e}")))?;
    if !(factor > 0.0) {
        return Err(usage("--box-factor must be positive"));
    }
    eff.set(&format!("{section}.box_factor"), factor.to_string());
    let b = working_box(model.domain(), &max, factor)?;
    if !b.lower.iter().all(|v| v.is_finite()) {
        return Err(usage("the model domain has no finite lower bound; pass --box"));
    }
    Ok(b)
}

fn merged_provenance(eff: &Effective, model: &Field) -> BTreeMap<String, String> {
    let mut p = eff.provenance();
    for (k, v) in model.provenance() {
        p.insert(format!("model.{k}"), v.clone());
    }
    p
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn portrait_cmd(a: PortraitArgs, cfg: &ConfigFile, eff: &mut Effective, out: &mut dyn Write) -> CliResult<()> {
    let model = load_poly(&a.model)?;
    eff.set("portrait.model", a.model.display().to_string());
    let c = &cfg.portrait;
    let factor = a.box_factor.or(c.box_factor).unwrap_or(10.0);
    let bounds = resolve_box(a.bounds.clone(), c.bounds.clone(), factor, &model, eff, "portrait")?;
    let grid = eff.pick("portrait.grid", a.grid, c.grid, 20);
    let per_axis = eff.pick("portrait.trajectories", a.trajectories, c.trajectories, 4);
    let tgrid = eff.pick("portrait.trending_grid", a.trending_grid, c.trending_grid, 10);
    let horizon = eff.pick("portrait.horizon", a.horizon, c.horizon, 100.0);
    if grid < 2 || tgrid == 1 || !(horizon > 0.0) {
        return Err(usage("--grid must be >= 2, --trending-grid 0 or >= 2, --horizon positive"));
    }
    let defaults = PortraitOptions::<f64>::default();
    let opts = PortraitOptions {
        model_ref: a.model.display().to_string(),
        grid,
        trajectories_per_axis: per_axis,
        trajectory: TrajectoryOptions {
            horizon,
            ..defaults.trajectory.clone()
        },
        trending_grid: (tgrid > 0).then_some(tgrid),
        ..defaults
    };
    let mut data = export_portrait(&model, &bounds, &opts)?;
    let provenance = merged_provenance(eff, &model);
    if let Some(t) = data.trending_report.as_mut() {
        t.provenance = provenance.clone();
    }
    data.provenance = provenance;

    let svg = match &a.svg {
        Some(_) => Some(render_svg(&data).ok_or_else(|| usage("SVG output needs a model with two or three variables"))?),
        None => None,
    };
    let mut json = data.to_json()?;
    json.push('\n');
    match &a.out {
        Some(path) => write_atomic(path, &json)?,
        None if a.svg.is_none() => write!(out, "{json}")?,
        None => {}
    }
    if let (Some(path), Some(svg)) = (&a.svg, svg) {
        write_atomic(path, &svg)?;
    }
    if a.out.is_some() || a.svg.is_some() {
        writeln!(out, "fixed points in {}:", fmt_box(&bounds))?;
        for f in &data.fixed_points {
            writeln!(out, "  {}  {}", fmt_point(&f.location), f.class)?;
        }
        if let Some(t) = &data.trending_report {
            writeln!(out, "{}", trending_summary(t))?;
        }
    }
    Ok(())
}

fn fmt_box(d: &Domain<f64>) -> String {
    let parts: Vec<String> = d
        .lower
        .iter()
        .zip(&d.upper)
        .map(|(l, u)| format!("[{l}, {u}]"))
        .collect();
    parts.join(" x ")
}

fn trending_summary(t: &trendflow::Trending) -> String {
    let verdict = match t.verdict {
        trendflow::portrait::Verdict::TrendingWithinHorizon => "trending within horizon",
        trendflow::portrait::Verdict::NotTrendingWithinHorizon => "not trending within horizon",
    };
    let mut s = format!(
        "trending sweep: {} samples, {} converged, {} escaped, {} undecided: {verdict}",
        t.outcomes.len(),
        t.converged,
        t.escaped,
        t.undecided
    );
    if let Some(note) = &t.theorem {
        s.push_str(&format!("; {note}"));
    }
    s
}

fn trending_cmd(a: TrendingArgs, cfg: &ConfigFile, eff: &mut Effective, out: &mut dyn Write) -> CliResult<()> {
    let model = load_poly(&a.model)?;
    eff.set("trending.model", a.model.display().to_string());
    let c = &cfg.trending;
    let factor = a.box_factor.or(c.box_factor).unwrap_or(10.0);
    let bounds = resolve_box(a.bounds.clone(), c.bounds.clone(), factor, &model, eff, "trending")?;
    let per_axis = eff.pick("trending.grid", a.grid, c.grid, 10);
    let interior = eff.pick("trending.interior", a.interior.then_some(true), c.interior, false);
    let defaults = TrajectoryOptions::<f64>::default();
    let horizon = eff.pick("trending.horizon", a.horizon, c.horizon, defaults.horizon);
    let h = eff.pick("trending.h", a.h, c.h, defaults.h);
    let escape_factor = eff.pick("trending.escape_factor", a.escape_factor, c.escape_factor, 10.0);
    if per_axis < 2 || !(horizon > 0.0) || !(h > 0.0) || !(escape_factor >= 1.0) {
        return Err(usage("--grid must be >= 2, --horizon and --h positive, --escape-factor >= 1"));
    }
    let grid = GridSpec::new(bounds.lower.clone(), bounds.upper.clone(), per_axis, interior)
        .map_err(|e| usage(format!("--box: {e}")))?;
    let cap: Vec<f64> = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(l, u)| l + escape_factor * (u - l))
        .collect();
    let escape = model.domain().capped(&cap);
    // root search needs finite bounds on every side
    let search = Domain::boxed(
        escape
            .lower
            .iter()
            .zip(bounds.lower.iter().zip(&cap))
            .zip(&bounds.upper)
            .map(|((&l, (&lo, &c)), &u)| if l.is_finite() { l } else { lo - (c - u) })
            .collect(),
        escape.upper.clone(),
    )?;
    let fixed: Vec<Vec<f64>> = find_fixed_points(&model, &search, &FixedPointOptions::default())?
        .into_iter()
        .map(|f| f.location)
        .collect();
    let opts = TrajectoryOptions {
        h,
        horizon,
        record_every: 0,
        ..defaults
    };
    let mut report = trending_check(&model, &escape, &grid, &fixed, &opts)?;
    report.provenance = merged_provenance(eff, &model);
    let mut json = serde_json::to_string_pretty(&report).map_err(trendflow::Error::from)?;
    json.push('\n');
    match &a.out {
        Some(path) => {
            write_atomic(path, &json)?;
            writeln!(out, "{}", trending_summary(&report))?;
        }
        None => write!(out, "{json}")?,
    }
    Ok(())
}

fn provenance_f64(model: &Model, key: &str) -> Option<f64> {
    let p = match model {
        Model::Poly(m) => m.provenance(),
        Model::Var(m) => m.provenance(),
    };
    p.get(key).and_then(|v| v.parse().ok())
}

fn predict_cmd(a: PredictArgs, cfg: &ConfigFile, eff: &mut Effective, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.model)?;
    eff.set("predict.model", a.model.display().to_string());
    let n = model.dim();
    let names = model.variable_names().to_vec();
    let scaling = match &model {
        Model::Poly(m) => m.scaling().clone(),
        Model::Var(m) => m.scaling().clone(),
    };
    if scaling.divisors.iter().chain(&scaling.adjusters).any(Option::is_some) {
        warn!("the model was fitted on exogenously normalized data; raw columns are in normalized units");
    }
    let steps = eff.pick("predict.steps", a.steps, cfg.predict.steps, 1);
    if steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }

    let history: Vec<Vec<f64>> = if let Some(state) = a.state.clone() {
        if state.len() != n {
            return Err(usage(format!("--state needs {n} values ({}), got {}", names.join(","), state.len())));
        }
        eff.set("predict.state", state.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        eff.set("predict.scaled", a.scaled.to_string());
        vec![if a.scaled { state } else { scaling.to_scaled(&state) }]
    } else if series_input(&a.series, &cfg.series).is_some() {
        let frame = load_series(&a.series, &cfg.series, eff)?;
        if frame.names() != names.as_slice() {
            return Err(usage(format!(
                "series columns [{}] do not match model variables [{}]; use --columns",
                frame.names().join(","),
                names.join(",")
            )));
        }
        frame.values().iter_rows().map(|r| scaling.to_scaled(r)).collect()
    } else {
        return Err(usage("pass --state v1,v2,... or --input FILE"));
    };

    let mut path: Vec<Vec<f64>> = Vec::with_capacity(steps);
    match &model {
        Model::Poly(m) => {
            let dt = eff.pick(
                "predict.dt",
                a.series.dt,
                cfg.predict.dt.or_else(|| provenance_f64(&model, "config.series.dt")),
                1.0,
            );
            let h = eff.pick(
                "predict.h",
                a.h,
                cfg.predict.h.or_else(|| provenance_f64(&model, "config.fit.h")),
                0.01,
            );
            if !(dt > 0.0) || !(h > 0.0) {
                return Err(usage("--dt and --h must be positive"));
            }
            let mut x = history.last().cloned().unwrap_or_default();
            for _ in 0..steps {
                x = ds_forecast(m, &x, dt, h)?;
                path.push(x.clone());
            }
        }
        Model::Var(m) => {
            if history.len() < m.p() {
                return Err(usage(format!(
                    "a VAR({}) forecast needs the last {} rows; pass --input",
                    m.p(),
                    m.p()
                )));
            }
            let mut hist: Vec<Vec<f64>> = history[history.len() - m.p()..].to_vec();
            for _ in 0..steps {
                let y = m.predict_one(&Matrix::from_rows(&hist)?)?;
                hist.remove(0);
                hist.push(y.clone());
                path.push(y);
            }
        }
    }

    let mut csv = String::from("step");
    for v in &names {
        csv.push_str(&format!(",{v}"));
    }
    for v in &names {
        csv.push_str(&format!(",{v}_raw"));
    }
    csv.push('\n');
    for (k, x) in path.iter().enumerate() {
        csv.push_str(&(k + 1).to_string());
        for v in x.iter().chain(&scaling.to_raw(x)) {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    match &a.out {
        Some(p) => {
            write_atomic(p, &csv)?;
            writeln!(out, "wrote {steps} forecast step(s) to {}", p.display())?;
        }
        None => write!(out, "{csv}")?,
    }
    Ok(())
}
