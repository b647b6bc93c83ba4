use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use ernet::cost::{
    closed_form, cost_report, dram_bandwidth_layerwise, frame_recompute_overhead,
    line_buffer_bytes, mb, ratio_f64, recompute_overhead_exact, CostReport, PyramidGeometry,
};
use ernet::io::{read_pnm, read_raw, write_pnm, write_raw};
use ernet::scan::{preset, rows_to_csv, rows_to_text, Family, ScanOptions};
use ernet::{
    infer_block_recompute, infer_block_recompute_traced, infer_block_reuse, infer_whole,
    tensor_dims, BlockSchedule, FeatureMap, FlowCounters, HardwareTarget, ModelSpec, Network,
    Variant,
};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::config::is_false;
use crate::model_args::{ModelArgs, SPEC_FILE, WEIGHTS_FILE};

#[derive(Debug)]
pub struct VerificationFailed(pub usize);

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} verification check(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn bytes(b: u64) -> String {
    format!("{b} ({:.6} MB)", mb(b))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("size {s:?} is not HxW"))?;
    let h: usize = h.trim().parse().with_context(|| format!("bad height in {s:?}"))?;
    let w: usize = w.trim().parse().with_context(|| format!("bad width in {s:?}"))?;
    if h == 0 || w == 0 {
        bail!("size {s:?} is empty");
    }
    Ok((h, w))
}

fn counters_text(label: &str, c: &FlowCounters) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{label}.macs_total = {}", c.macs_total);
    let _ = writeln!(s, "{label}.dram_feature_bytes = {}", bytes(c.dram_feature_bytes));
    let _ = writeln!(s, "{label}.line_buffer_peak_bytes = {}", bytes(c.line_buffer_peak_bytes));
    let _ = writeln!(s, "{label}.block_buffer_peak_bytes = {}", bytes(c.block_buffer_peak_bytes));
    let _ = writeln!(s, "{label}.skip_buffer_peak_bytes = {}", bytes(c.skip_buffer_peak_bytes));
    s
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ImageArgs {
    /// PGM/PPM image or raw tensor dump.
    #[arg(long, value_name = "PATH", conflicts_with = "size")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,

    /// Random input image HxW (seeded from --seed + 1).
    #[arg(long, value_name = "HxW")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<String>,
}

impl ImageArgs {
    fn load(&self, channels: usize, seed: u64, default_size: Option<&str>) -> Result<FeatureMap> {
        if let Some(path) = &self.input {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let reader = std::io::BufReader::new(file);
            let img = if path.extension().is_some_and(|e| e == "raw") {
                read_raw(reader)
            } else {
                read_pnm(reader)
            }
            .with_context(|| format!("reading {}", path.display()))?;
            if img.channels() != channels {
                bail!("image has {} channels, model expects {channels}", img.channels());
            }
            return Ok(img);
        }
        let size = self
            .size
            .as_deref()
            .or(default_size)
            .context("give --input or --size")?;
        let (h, w) = parse_size(size)?;
        Ok(FeatureMap::random(h, w, channels, seed.wrapping_add(1))?)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BuildArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    /// Weight seed.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn build(a: BuildArgs) -> Result<()> {
    let net = a.model.network(a.seed.unwrap_or(0))?;
    let spec = net.spec();
    let dir = a.out.unwrap_or_else(|| PathBuf::from("ernet-model"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let spec_file = dir.join(SPEC_FILE);
    let weights_file = dir.join(WEIGHTS_FILE);
    fs::write(&spec_file, spec.to_json()).with_context(|| format!("writing {}", spec_file.display()))?;
    fs::write(&weights_file, net.blob_bytes())
        .with_context(|| format!("writing {}", weights_file.display()))?;
    let mut s = String::new();
    let _ = writeln!(s, "model = {}", spec.name);
    let _ = writeln!(s, "conv_layers = {}", spec.layers.iter().filter(|l| l.kind.is_conv()).count());
    let _ = writeln!(s, "depth = {}", spec.depth());
    let _ = writeln!(s, "params = {}", spec.param_count());
    let _ = writeln!(s, "macs_per_pixel = {}", fmt_ratio(spec.macs_per_output_pixel()));
    let _ = writeln!(s, "spec = {}", spec_file.display());
    let _ = writeln!(s, "weights = {}", weights_file.display());
    emit(&s, None)
}

fn fmt_ratio(r: Ratio<u64>) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{r} ({:.6})", ratio_f64(r))
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct InferArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub image: ImageArgs,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// whole | recompute | reuse
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,

    /// Output tile width in pixels [default: 32].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,

    /// [default: 1]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes_per_feature: Option<u64>,

    /// Output image (.pgm/.ppm) or raw tensor (.raw).
    #[arg(long, value_name = "PATH")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Also dump the output as a raw tensor here.
    #[arg(long, value_name = "PATH")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<PathBuf>,
}

fn write_output(map: &FeatureMap, path: &Path, force_raw: bool) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    if force_raw || path.extension().is_some_and(|e| e == "raw") {
        write_raw(map, &mut w)
    } else {
        write_pnm(map, &mut w)
    }
    .with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn infer(a: InferArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let net = a.model.network(seed)?;
    let img = a.image.load(net.spec().input_channels, seed, None)?;
    let bpf = a.bytes_per_feature.unwrap_or(1);
    let sched = BlockSchedule::new(a.block_size.unwrap_or(32)).with_bytes_per_feature(bpf);
    let flow = a.flow.as_deref().unwrap_or("whole").to_ascii_lowercase();
    let (out, c) = match flow.as_str() {
        "whole" => infer_whole(&net, &img, bpf)?,
        "recompute" => infer_block_recompute(&net, &img, &sched)?,
        "reuse" => infer_block_reuse(&net, &img, &sched)?,
        other => bail!("unknown flow {other:?}; expected whole, recompute or reuse"),
    };
    if let Some(p) = &a.out {
        write_output(&out, p, false)?;
    }
    if let Some(p) = &a.raw {
        write_output(&out, p, true)?;
    }
    let mut s = String::new();
    let _ = writeln!(s, "model = {}", net.spec().name);
    let _ = writeln!(s, "flow = {flow}");
    if flow != "whole" {
        let _ = writeln!(s, "block_size = {}", sched.block_size);
    }
    let (h, w, ch) = img.shape();
    let _ = writeln!(s, "input = {h}x{w}x{ch}");
    let (h, w, ch) = out.shape();
    let _ = writeln!(s, "output = {h}x{w}x{ch}");
    s.push_str(&counters_text(&flow, &c));
    emit(&s, None)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub image: ImageArgs,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Output tile width in pixels [default: 32].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,

    /// [default: 1]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes_per_feature: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

struct Checks {
    text: String,
    failed: usize,
}

impl Checks {
    fn line(&mut self, key: &str, value: impl fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    fn check(&mut self, key: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        let _ = writeln!(self.text, "{key} = {} ({detail})", if ok { "ok" } else { "MISMATCH" });
    }
}

/// Sum over conv layers of output pixels times per-pixel MACs.
fn analytic_macs(spec: &ModelSpec, h: usize, w: usize) -> Result<u64> {
    let dims = tensor_dims(spec, h, w)?;
    Ok(spec
        .layers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind.is_conv())
        .map(|(i, l)| dims[i + 1].pixels() as u64 * l.macs_per_pixel())
        .sum())
}

pub fn verify_flows(a: VerifyArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let net: Network = a.model.network(seed)?;
    let spec = net.spec();
    let img = a.image.load(spec.input_channels, seed, Some("96x96"))?;
    let (h, w, _) = img.shape();
    let bpf = a.bytes_per_feature.unwrap_or(1);
    let s_out = a.block_size.unwrap_or(32);
    let sched = BlockSchedule::new(s_out).with_bytes_per_feature(bpf);

    let (whole, cw) = infer_whole(&net, &img, bpf)?;
    let (rec, cr, traces) = infer_block_recompute_traced(&net, &img, &sched)?;
    let (reuse, cu) = infer_block_reuse(&net, &img, &sched)?;

    let mut k = Checks {
        text: String::new(),
        failed: 0,
    };
    k.line("model", &spec.name);
    k.line("input", format!("{h}x{w}x{}", img.channels()));
    k.line("block_size", s_out);
    let d_rec = whole.max_abs_diff(&rec)?;
    let d_reuse = whole.max_abs_diff(&reuse)?;
    k.check("max_abs_diff.recompute", whole.bit_eq(&rec), format!("{d_rec:e}"));
    k.check("max_abs_diff.reuse", whole.bit_eq(&reuse), format!("{d_reuse:e}"));
    k.text.push_str(&counters_text("whole", &cw));
    k.text.push_str(&counters_text("recompute", &cr));
    k.text.push_str(&counters_text("reuse", &cu));

    let macs = analytic_macs(spec, h, w)?;
    k.check(
        "macs.whole",
        cw.macs_total == macs,
        format!("measured {} analytic {macs}", cw.macs_total),
    );
    k.check(
        "macs.reuse",
        cu.macs_total == macs,
        format!("measured {} analytic {macs}", cu.macs_total),
    );
    let dram = dram_bandwidth_layerwise(spec, w, h, 1, bpf)?;
    k.check(
        "dram.whole",
        cw.dram_feature_bytes == dram,
        format!("measured {} analytic {dram}", cw.dram_feature_bytes),
    );
    if macs > 0 {
        let measured = Ratio::new(cr.macs_total, macs) - 1;
        let analytic = frame_recompute_overhead(spec, w, h, s_out)?;
        k.check(
            "recompute_overhead.frame",
            measured == analytic,
            format!("measured {:.6} analytic {:.6}", ratio_f64(measured), ratio_f64(analytic)),
        );
    }

    let out_w = whole.width();
    let lb = line_buffer_bytes(spec, out_w, s_out, bpf)?;
    let delta = if lb == 0 {
        0.0
    } else {
        (cu.line_buffer_peak_bytes as f64 - lb as f64) / lb as f64
    };
    k.line(
        "line_buffer.reuse",
        format!(
            "measured {} analytic {} delta {:+.4}",
            bytes(cu.line_buffer_peak_bytes),
            bytes(lb),
            delta
        ),
    );

    let geo = PyramidGeometry::for_output_tile(spec, s_out);
    k.line("pyramid.s_in", geo.s_in);
    k.line("pyramid.s_out", geo.s_out);
    k.line("pyramid.beta", format!("{:.6}", geo.beta()));
    let analytic = geo.overhead(spec);
    let interior = traces.iter().find(|t| {
        t.input_region.width() == geo.s_in
            && t.input_region.height() == geo.s_in
            && t.tile.width() == s_out
            && t.tile.height() == s_out
    });
    match interior {
        Some(t) => {
            let base = spec.macs_per_output_pixel() * (s_out * s_out) as u64;
            let measured = Ratio::from_integer(t.macs) / base - 1;
            k.check(
                "recompute_overhead.interior",
                measured == analytic,
                format!("measured {:.6} analytic {:.6}", ratio_f64(measured), ratio_f64(analytic)),
            );
        }
        None => k.line("recompute_overhead.interior", "n/a (no interior tile)"),
    }
    if 2 * geo.halo < geo.s_in {
        let discrete = recompute_overhead_exact(geo.halo, geo.s_in)?;
        k.line("recompute_overhead.uniform_layers", format!("{discrete:.6}"));
    }
    k.line("recompute_overhead.closed_form", format!("{:.6}", closed_form(geo.beta())));

    let failed = k.failed;
    k.line("result", if failed == 0 { "pass" } else { "fail" });
    emit(&k.text, a.out.as_deref())?;
    if failed > 0 {
        return Err(VerificationFailed(failed).into());
    }
    Ok(())
}

/// A preset name or a TOML file.
fn load_target(name: &str) -> Result<HardwareTarget> {
    let path = Path::new(name);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return HardwareTarget::from_toml(&text).with_context(|| format!("parsing {}", path.display()));
    }
    preset(name).with_context(|| format!("{name:?} is neither a file nor a preset"))
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CostArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    /// Preset (A, B, C, E) or target TOML file.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,

    /// Overrides the target's block size.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes_per_feature: Option<u64>,

    /// text | csv [default: text]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,

    #[arg(long, value_name = "PATH")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn cost(a: CostArgs) -> Result<()> {
    let spec = a.model.spec()?;
    let mut target = load_target(a.target.as_deref().context("give --target")?)?;
    if let Some(s) = a.block_size {
        target.block_size = s;
    }
    if let Some(b) = a.bytes_per_feature {
        target.bytes_per_feature = b;
    }
    target.validate()?;
    let report = cost_report(&spec, &target)?;
    let text = match a.format.as_deref().unwrap_or("text") {
        "text" => report.to_text(),
        "csv" => format!("{}\n{}\n", CostReport::csv_header(), report.csv_row()),
        other => bail!("unknown format {other:?}; expected text or csv"),
    };
    emit(&text, a.out.as_deref())?;
    if !report.feasible {
        eprintln!("target {} violated: {}", target.name, report.violated);
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScanArgs {
    /// dnernet | sr4ernet [default: dnernet]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,

    /// E3R1 | E1R3 | E3R3 [default: E3R1]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,

    /// Preset or target TOML file [default: C for dnernet, E for sr4ernet].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,

    /// [default: 1]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_min: Option<usize>,

    /// [default: 40]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_max: Option<usize>,

    /// Largest integer expansion ratio tried [default: 8].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,

    /// Chain width [default: 32].
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,

    /// Compute budget in MAC/s, replacing the target's.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,

    /// Line-buffer limit in bytes, replacing the target's.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_buffer_limit: Option<u64>,

    /// Drop the target's compute budget.
    #[arg(long, conflicts_with = "budget")]
    #[serde(default, skip_serializing_if = "is_false")]
    pub unlimited: bool,

    /// csv | text [default: csv]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,

    #[arg(long, value_name = "PATH")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub fn scan(a: ScanArgs) -> Result<()> {
    let family: Family = a.family.as_deref().unwrap_or("dnernet").parse()?;
    let variant: Variant = a.variant.as_deref().unwrap_or("E3R1").parse()?;
    let default_target = match family {
        Family::DnERNet => "C",
        Family::Sr4ERNet => "E",
    };
    let mut target = load_target(a.target.as_deref().unwrap_or(default_target))?;
    if let Some(s) = a.block_size {
        target.block_size = s;
    }
    if let Some(b) = a.budget {
        target.compute_budget = Some(b);
    }
    if a.unlimited {
        target.compute_budget = None;
    }
    if let Some(l) = a.line_buffer_limit {
        target.line_buffer_limit = Some(l);
    }
    let opts = ScanOptions {
        family,
        variant,
        width: a.width.unwrap_or(32),
        blocks: a.b_min.unwrap_or(1)..=a.b_max.unwrap_or(40),
        r_max: a.r_max.unwrap_or(8),
    };
    let rows = ernet::scan::scan(&opts, &target)?;
    let text = match a.format.as_deref().unwrap_or("csv") {
        "csv" => rows_to_csv(&rows),
        "text" => rows_to_text(&opts, &target, &rows),
        other => bail!("unknown format {other:?}; expected csv or text"),
    };
    emit(&text, a.out.as_deref())?;
    let feasible: Vec<_> = rows.iter().filter(|r| r.feasible).collect();
    eprintln!(
        "frontier: {} of {} rows feasible on target {}",
        feasible.len(),
        rows.len(),
        target.name
    );
    if let Some(best) = feasible.iter().max_by(|x, y| {
        (x.macs_per_pixel, x.blocks).cmp(&(y.macs_per_pixel, y.blocks))
    }) {
        eprintln!(
            "largest feasible model: B={} R_I={} N={} R_E={:.4} depth={}",
            best.blocks,
            best.base_ratio,
            best.extra,
            ratio_f64(best.r_e),
            best.depth
        );
    }
    Ok(())
}
