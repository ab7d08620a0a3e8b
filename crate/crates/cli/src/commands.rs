use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ppmrx_core::analysis::{db_gap_report, fit_scaling, write_db_gaps, FitMode, FitWindow};
use ppmrx_core::bounds::cpn_error_optimized;
use ppmrx_core::exact::{brute_force_tree_error, greedy_lut_optimized, BRUTE_FORCE_CAP};
use ppmrx_core::greedy::{build_policy_table, PolicyTable};
use ppmrx_core::montecarlo::{simulate, ReceiverConfig, SimConfig, DEFAULT_TRIALS};
use ppmrx_core::record::{
    format_sig, read_records, write_records, EvalMethod, OutputFormat, ReceiverKind, SweepRecord,
};
use ppmrx_core::search::linspace;
use ppmrx_core::sweep::{run_sweep, Backend, Preset, SweepConfig};
use ppmrx_core::{Error, GridConfig, Result, ScalarSearchConfig};

use crate::cli::*;
use crate::config::{as_config, output_format, photon_grid, Channel, FileConfig};

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(records: &[SweepRecord], output: &OutputArgs, file: &FileConfig) -> Result<()> {
    let format = match output_format(output, file)? {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    write_records(open_output(output.out.as_deref())?, records, format)
}

fn parse_receivers(names: &[String]) -> Result<Vec<ReceiverKind>> {
    names.iter().map(|s| s.parse()).collect()
}

pub fn stats(args: &StatsArgs, file: &FileConfig) -> Result<()> {
    let params = Channel::resolve(&args.channel, file)?.params_any_order()?;
    let model = params.click_model();
    let beta_max = args.beta_max.unwrap_or(params.alpha + 5.0);
    let mut out = open_output(args.out.as_deref())?;
    writeln!(out, "beta,q,p,q_bar,p_bar")?;
    for beta in linspace(args.beta_min, beta_max, args.beta_points) {
        let s = ppmrx_core::ClickModel::probs(&model, beta);
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig(beta),
            format_sig(s.q),
            format_sig(s.p),
            format_sig(s.q_bar),
            format_sig(s.p_bar)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn grid_sweep(
    channel: &ChannelArgs,
    grid: &GridArgs,
    file: &FileConfig,
    receivers: Vec<ReceiverKind>,
) -> Result<SweepConfig> {
    let ch = Channel::resolve(channel, file)?;
    let grid = photon_grid(grid, &ch, file)?;
    let mut cfg = SweepConfig::new(ch.order()?, grid, ch.nb, ch.delta, receivers);
    cfg.seed = file.seed.unwrap_or(0);
    Ok(cfg)
}

pub fn bounds(args: &BoundsArgs, file: &FileConfig) -> Result<()> {
    use ReceiverKind::*;
    let mut cfg = grid_sweep(
        &args.channel,
        &args.grid,
        file,
        vec![Helstrom, Dd, Cpn, CpnOpt, GreedyLimit],
    )?;
    cfg.beta = args.beta.or(file.beta);
    emit(&run_sweep(&cfg).map_err(as_config)?, &args.output, file)
}

pub fn exact(args: &ExactArgs, file: &FileConfig) -> Result<()> {
    let mut cfg = grid_sweep(&args.channel, &args.grid, file, vec![ReceiverKind::Greedy])?;
    cfg.backend = Backend::Exact;
    cfg.beta_in = args.beta_in.or(file.beta_in);
    emit(&run_sweep(&cfg).map_err(as_config)?, &args.output, file)
}

pub fn optimal(args: &OptimalArgs, file: &FileConfig) -> Result<()> {
    let mut cfg = grid_sweep(&args.channel, &args.grid, file, vec![ReceiverKind::Optimal])?;
    if let Some(points) = args.dp_points.or(file.dp_points) {
        cfg.dp_grid = cfg.dp_grid.with_points(points);
    }
    if args.brute && cfg.m > BRUTE_FORCE_CAP {
        return Err(Error::Capacity(format!(
            "brute-force tree optimization is limited to M <= {BRUTE_FORCE_CAP}, got {}",
            cfg.m
        )));
    }
    let dp_rows = run_sweep(&cfg).map_err(as_config)?;
    let mut rows = Vec::with_capacity(dp_rows.len() * 2);
    for row in dp_rows {
        rows.push(row);
        if args.brute {
            let params = ppmrx_core::ChannelParams::from_photons(row.n, row.nb, row.delta, row.m)?;
            let p = brute_force_tree_error(row.m, &params.click_model(), &cfg.search)?;
            rows.push(
                SweepRecord {
                    method: EvalMethod::Brute,
                    p_error: p,
                    ..row
                }
                .quantized(),
            );
        }
    }
    emit(&rows, &args.output, file)
}

pub fn simulate_cmd(args: &SimulateArgs, file: &FileConfig) -> Result<()> {
    let params = Channel::resolve(&args.channel, file)?.params()?;
    let model = params.click_model();
    let search = ScalarSearchConfig::default();
    let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let (kind, beta, receiver) = match args.receiver {
        SimReceiver::Dd => (ReceiverKind::Dd, None, ReceiverConfig::Dd),
        SimReceiver::Cpn => {
            let beta = args.beta.or(file.beta).unwrap_or(params.alpha);
            (ReceiverKind::Cpn, Some(beta), ReceiverConfig::Cpn { beta })
        }
        SimReceiver::CpnOpt => {
            let beta = cpn_error_optimized(params.m, &model, &search)?
                .beta_used
                .unwrap_or(params.alpha);
            (
                ReceiverKind::CpnOpt,
                Some(beta),
                ReceiverConfig::Cpn { beta },
            )
        }
        SimReceiver::Greedy => {
            let table = if args.lut == "auto" {
                let points = args
                    .lut_points
                    .or(file.lut_points)
                    .unwrap_or(GridConfig::default().points);
                let grid = GridConfig::default().with_points(points);
                build_policy_table(&model, &grid, &search)
                    .map_err(as_config)?
                    .with_params(params)
            } else {
                let path = PathBuf::from(&args.lut);
                let f = File::open(&path).map_err(|e| {
                    Error::Config(format!("cannot open policy table {}: {e}", path.display()))
                })?;
                PolicyTable::read_csv(BufReader::new(f)).map_err(as_config)?
            };
            let beta_in = match args.beta_in.or(file.beta_in) {
                Some(b) => b,
                None => greedy_lut_optimized(params.m, &table, &model, &search)?.1,
            };
            (
                ReceiverKind::Greedy,
                Some(beta_in),
                ReceiverConfig::Greedy {
                    beta_in,
                    table: Some(Arc::new(table)),
                },
            )
        }
    };
    let result = simulate(
        &params,
        &SimConfig {
            trials,
            master_seed: seed,
            receiver,
        },
    )
    .map_err(as_config)?;
    let record = SweepRecord {
        receiver: kind,
        m: params.m,
        n: params.photons(),
        nb: params.n_b,
        delta: params.delta,
        beta,
        p_error: result.p_error_hat,
        sigma: result.sigma,
        trials: result.trials,
        seed: Some(seed),
        method: EvalMethod::Mc,
    };
    emit(&[record.quantized()], &args.output, file)
}

pub fn sweep(args: &SweepArgs, file: &FileConfig) -> Result<()> {
    let preset = args.preset.as_ref().or(file.preset.as_ref());
    let mut cfg = match preset {
        Some(name) => {
            let mut cfg = SweepConfig::preset(name.parse::<Preset>()?);
            let ch = Channel::resolve(&args.channel, file)?;
            if let Some(m) = ch.m {
                cfg.m = m;
            }
            if let Some(nb) = args.channel.nb.or(file.nb) {
                cfg.nb_values = vec![nb];
            }
            if let Some(delta) = args.channel.delta.or(file.delta) {
                cfg.delta_values = vec![delta];
            }
            if let Some(v) = args.grid.n_min.or(file.n_min) {
                cfg.grid.n_min = v;
            }
            if let Some(v) = args.grid.n_max.or(file.n_max) {
                cfg.grid.n_max = v;
            }
            if let Some(v) = args.grid.n_points.or(file.n_points) {
                cfg.grid.points = v;
            }
            cfg
        }
        None => {
            use ReceiverKind::*;
            grid_sweep(
                &args.channel,
                &args.grid,
                file,
                vec![Helstrom, Dd, CpnOpt, Greedy],
            )?
        }
    };
    if let Some(names) = args.receivers.as_ref().or(file.receivers.as_ref()) {
        cfg.receivers = parse_receivers(names)?;
    }
    if let Some(b) = args.backend.as_ref().or(file.backend.as_ref()) {
        cfg.backend = b.parse()?;
    }
    if let Some(t) = args.trials.or(file.trials) {
        cfg.trials = t;
    }
    if let Some(s) = args.seed.or(file.seed) {
        cfg.seed = s;
    }
    cfg.beta = args.beta.or(file.beta).or(cfg.beta);
    cfg.beta_in = args.beta_in.or(file.beta_in).or(cfg.beta_in);
    if let Some(p) = args.lut_points.or(file.lut_points) {
        cfg.lut = cfg.lut.with_points(p);
    }
    if let Some(p) = args.dp_points.or(file.dp_points) {
        cfg.dp_grid = cfg.dp_grid.with_points(p);
    }
    let rows = run_sweep(&cfg).map_err(as_config)?;
    if args.pivot {
        write_pivot(
            open_output(args.output.out.as_deref())?,
            &rows,
            &cfg.receivers,
        )
    } else {
        emit(&rows, &args.output, file)
    }
}

/// One row per `(nb, delta, n)` and one error-probability column per receiver.
fn write_pivot(out: impl Write, rows: &[SweepRecord], receivers: &[ReceiverKind]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["nb".to_string(), "delta".to_string(), "n".to_string()];
    header.extend(receivers.iter().map(|r| r.to_string()));
    w.write_record(&header)?;
    let mut order = Vec::new();
    let mut table: BTreeMap<(u64, u64, u64), BTreeMap<ReceiverKind, f64>> = BTreeMap::new();
    for r in rows {
        let key = (r.nb.to_bits(), r.delta.to_bits(), r.n.to_bits());
        if !table.contains_key(&key) {
            order.push((key, *r));
        }
        table.entry(key).or_default().insert(r.receiver, r.p_error);
    }
    for (key, r) in order {
        let mut line = vec![format_sig(r.nb), format_sig(r.delta), format_sig(r.n)];
        line.extend(receivers.iter().map(|k| {
            table[&key]
                .get(k)
                .map(|&p| format_sig(p))
                .unwrap_or_default()
        }));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}

pub fn lut_build(args: &LutBuildArgs, file: &FileConfig) -> Result<()> {
    let params = Channel::resolve(&args.channel, file)?.params_any_order()?;
    let defaults = GridConfig::default();
    let grid = GridConfig {
        min: args.r_min.unwrap_or(defaults.min),
        max: args.r_max.unwrap_or(defaults.max),
        points: args.points.or(file.lut_points).unwrap_or(defaults.points),
    };
    grid.validate().map_err(as_config)?;
    let table = build_policy_table(&params.click_model(), &grid, &ScalarSearchConfig::default())?
        .with_params(params);
    table.write_csv(open_output(args.out.as_deref())?)
}

pub fn lut_query(args: &LutQueryArgs) -> Result<()> {
    let f = File::open(&args.lut).map_err(|e| {
        Error::Config(format!(
            "cannot open policy table {}: {e}",
            args.lut.display()
        ))
    })?;
    let table = PolicyTable::read_csv(BufReader::new(f)).map_err(as_config)?;
    let mut out = open_output(None)?;
    writeln!(out, "r,option,beta")?;
    for &r in &args.r {
        let a = table.lookup(r);
        writeln!(out, "{r},{},{}", a.option, a.beta)?;
    }
    out.flush()?;
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let input: Box<dyn BufRead> = if args.input.as_os_str() == "-" {
        Box::new(BufReader::new(io::stdin().lock()))
    } else {
        let f = File::open(&args.input)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", args.input.display())))?;
        Box::new(BufReader::new(f))
    };
    let records = read_records(input).map_err(as_config)?;
    let out = open_output(args.out.as_deref())?;
    let window = |default: FitWindow| FitWindow {
        n_min: args.n_min.unwrap_or(default.n_min),
        n_max: args.n_max.unwrap_or(default.n_max),
    };
    match args.mode {
        FitModeArg::PhotonStarved => fit_scaling(
            &records,
            FitMode::PhotonStarved,
            window(FitWindow::PHOTON_STARVED),
        )
        .map_err(as_config)?
        .write_csv(out),
        FitModeArg::StrongPulse => {
            fit_scaling(&records, FitMode::StrongPulse, window(FitWindow::ALL))
                .map_err(as_config)?
                .write_csv(out)
        }
        FitModeArg::DbGap => {
            let reference: ReceiverKind = args.reference.parse()?;
            let w = window(FitWindow::ALL);
            let kept: Vec<SweepRecord> = records.into_iter().filter(|r| w.contains(r.n)).collect();
            write_db_gaps(out, &db_gap_report(&kept, reference).map_err(as_config)?)
        }
    }
}
