use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pulse_core::codec::Image;
use pulse_core::engine::{run_model, NetworkRun};
use pulse_core::manifest::{load_manifest, save_manifest};
use pulse_core::model::{parse_topology, HardwareConfig, LayerSpec, Model, NetworkSpec};
use pulse_core::oracle::{forward_spikes, OracleRun};
use pulse_core::partition::{allocate, profile as profile_workloads, WorkloadProfile, PROFILE_FORMAT_VERSION};
use pulse_core::perf::report;
use pulse_core::{synth, Fx32};

use crate::{Format, GenArgs, PartitionArgs, ProfileArgs, RunArgs};

#[derive(Debug)]
pub enum CliError {
    Core(pulse_core::Error),
    Io { path: PathBuf, source: std::io::Error },
    Invalid(String),
    OracleMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_io() => 3,
            CliError::Io { .. } => 3,
            CliError::Core(_) | CliError::Invalid(_) => 2,
            CliError::OracleMismatch(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Invalid(m) => f.write_str(m),
            CliError::OracleMismatch(m) => write!(f, "oracle mismatch: {m}"),
        }
    }
}

impl From<pulse_core::Error> for CliError {
    fn from(e: pulse_core::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_inputs(paths: &[PathBuf], spec: &NetworkSpec) -> Result<Vec<Image>> {
    paths.iter().map(|p| Ok(Image::read(p, spec.input())?)).collect()
}

pub fn profile(args: &ProfileArgs) -> Result<String> {
    let model = load_manifest(&args.manifest)?;
    let inputs = read_inputs(&args.input, &model.spec)?;
    let samples = args.samples.unwrap_or(inputs.len());
    if samples == 0 {
        return Err(CliError::Invalid("--samples must be at least 1".into()));
    }
    let images: Vec<Image> = (0..samples).map(|i| inputs[i % inputs.len()].clone()).collect();
    let prof = profile_workloads(&model.spec, &model.weights, &images, args.seed)?;
    create_dir(&args.out_dir)?;
    write_file(&args.out_dir.join("profile.json"), &prof.to_json())?;
    write_file(&args.out_dir.join("profile.csv"), &prof.to_csv())?;
    Ok(match args.format {
        Format::Json => prof.to_json(),
        Format::Csv => prof.to_csv(),
        Format::Text => prof.to_text(),
    })
}

/// Per-layer core counts, mergeable into a manifest's `layers` entries.
#[derive(Serialize, Deserialize)]
pub struct PartitionFile {
    pub format_version: u32,
    pub topology: String,
    pub budget: usize,
    pub nc_count: Vec<usize>,
    /// Network layer index of the slowest layer.
    pub bottleneck_layer: usize,
    /// `max W_l / N_l` as `[numerator, denominator]`.
    pub bottleneck: [u64; 2],
    pub layers: Vec<PartitionLayer>,
}

#[derive(Serialize, Deserialize)]
pub struct PartitionLayer {
    pub layer: usize,
    pub nc_count: usize,
}

pub fn partition(args: &PartitionArgs) -> Result<String> {
    let text = fs::read_to_string(&args.profile).map_err(|source| CliError::Io {
        path: args.profile.clone(),
        source,
    })?;
    let prof: WorkloadProfile = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: malformed profile: {e}", args.profile.display())))?;
    if prof.format_version != PROFILE_FORMAT_VERSION {
        return Err(CliError::Invalid(format!(
            "{}: unsupported profile format_version {}",
            args.profile.display(),
            prof.format_version
        )));
    }
    let alloc = allocate(&prof.workloads(), &prof.caps(), args.budget)?;
    let file = PartitionFile {
        format_version: PROFILE_FORMAT_VERSION,
        topology: prof.topology.clone(),
        budget: args.budget,
        nc_count: alloc.nc_count.clone(),
        bottleneck_layer: prof.layers[alloc.bottleneck_layer].layer,
        bottleneck: alloc.bottleneck,
        layers: prof
            .layers
            .iter()
            .zip(&alloc.nc_count)
            .map(|(l, &n)| PartitionLayer {
                layer: l.layer,
                nc_count: n,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("partition serializes") + "\n";
    create_dir(&args.out_dir)?;
    write_file(&args.out_dir.join("partition.json"), &json)?;
    Ok(match args.format {
        Format::Json => json,
        Format::Csv => {
            let mut out = String::from("layer,kind,workload,nc_count\n");
            for (l, n) in prof.layers.iter().zip(&file.nc_count) {
                let _ = writeln!(out, "{},{},{},{n}", l.layer, l.kind, l.workload);
            }
            out
        }
        Format::Text => {
            let mut out = format!("{:>5}  {:<6}  {:>12}  {:>8}\n", "layer", "kind", "workload", "nc_count");
            for (l, n) in prof.layers.iter().zip(&file.nc_count) {
                let _ = writeln!(out, "{:>5}  {:<6}  {:>12}  {:>8}", l.layer, l.kind, l.workload, n);
            }
            let [num, den] = file.bottleneck;
            let _ = writeln!(
                out,
                "\nbottleneck layer {}: W/N = {num}/{den} = {:.3}",
                file.bottleneck_layer,
                num as f64 / den as f64
            );
            out
        }
    })
}

/// First difference between the engine and the dense reference.
pub fn oracle_diff(engine: &NetworkRun, oracle: &OracleRun) -> Option<String> {
    if engine.input != oracle.input {
        return Some("encoded input differs".into());
    }
    for (i, (e, o)) in engine.layers.iter().zip(&oracle.layer_outputs).enumerate() {
        if &e.output != o {
            return Some(format!(
                "layer {i} output differs ({} vs {} spikes)",
                e.output.total_spikes(),
                o.total_spikes()
            ));
        }
    }
    if engine.output_counts != oracle.output_counts {
        return Some("output spike counts differ".into());
    }
    if engine.decision != oracle.decision {
        return Some(format!(
            "predicted class {} vs {}",
            engine.decision.class, oracle.decision.class
        ));
    }
    None
}

pub fn run(args: &RunArgs) -> Result<String> {
    let model = load_manifest(&args.manifest)?;
    let image = Image::read(&args.input, model.spec.input())?;
    let run = run_model(&model, &image, args.seed)?;
    let rep = report(&model.spec, &model.hw, &run, args.seed);
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        write_file(&dir.join("report.json"), &rep.to_json())?;
        write_file(&dir.join("report.csv"), &rep.to_csv())?;
        write_file(&dir.join("report.txt"), &rep.to_text())?;
        if args.dump_spikes {
            let spikes = dir.join("spikes");
            create_dir(&spikes)?;
            write_file(&spikes.join("input.spikes"), &run.input.to_dump_string())?;
            for (i, l) in run.layers.iter().enumerate() {
                write_file(&spikes.join(format!("layer{i}.spikes")), &l.output.to_dump_string())?;
            }
        }
    }
    let mut out = match args.format {
        Format::Json => rep.to_json(),
        Format::Csv => rep.to_csv(),
        Format::Text => rep.to_text(),
    };
    if args.oracle_check {
        let oracle = forward_spikes(&model.spec, &model.weights, run.input.clone());
        if let Some(diff) = oracle_diff(&run, &oracle) {
            return Err(CliError::OracleMismatch(diff));
        }
        if args.format == Format::Text {
            out.push_str("oracle     match\n");
        }
    }
    Ok(out)
}

pub fn gen_random(args: &GenArgs) -> Result<String> {
    let mut rng = synth::rng(args.seed);
    let model = match &args.topology {
        None => synth::random_model(&mut rng, synth::ModelLimits::default()),
        Some(t) => {
            let (lo, hi) = (args.w_min, args.w_max);
            if !(lo <= hi && Fx32::encode(lo).is_ok() && Fx32::encode(hi).is_ok()) {
                return Err(CliError::Invalid(format!(
                    "weight range [{lo}, {hi}] must be ordered and inside [-4, 4)"
                )));
            }
            let topology = parse_topology(t, args.pop_per_class)?;
            let beta = Fx32::from_decimal_str(&args.beta)?;
            let spec = NetworkSpec::new(topology, args.timesteps, beta, args.classes, args.pop_per_class)?;
            let weights = synth::random_weights(&spec, lo, hi, &mut rng);
            let mut hw = HardwareConfig::naive(&spec);
            for (cfg, li) in hw.layers.iter_mut().zip(spec.compute_layers()) {
                if matches!(spec.layers()[li], LayerSpec::Conv(_)) {
                    cfg.chunk_count = args.chunks;
                }
            }
            if !args.nc.is_empty() {
                if args.nc.len() != hw.layers.len() {
                    return Err(CliError::Invalid(format!(
                        "--nc lists {} counts for {} compute layers",
                        args.nc.len(),
                        hw.layers.len()
                    )));
                }
                hw = hw.with_nc_counts(&args.nc);
            }
            Model::new(spec, weights, hw)?
        }
    };
    let image = synth::random_image(model.spec.input(), 1.0, &mut rng);
    create_dir(&args.out_dir)?;
    let manifest = args.out_dir.join("manifest.json");
    save_manifest(&manifest, &model)?;
    image.write(&args.out_dir.join("input.bin"))?;
    Ok(format!(
        "wrote {} ({}, {} compute layers) and input.bin\n",
        manifest.display(),
        model.spec.render_topology(),
        model.hw.layers.len()
    ))
}
