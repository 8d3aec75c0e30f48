use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use posetlim::cut::{converge_experiment, cut_distance_bounds, default_family, SearchConfig};
use posetlim::density::{t_exact, t_ind_exact, t_inj_exact, t_mc};
use posetlim::io::{poset_to_json, read_digraph, read_poset, read_step_function};
use posetlim::kernel::{
    check_axioms, t_kernel_mc, thin, AxiomReport, Kernel, KernelVisitor, NamedKernel,
};
use posetlim::mc::{substream, DensityEstimate};
use posetlim::sampler::{gnp_order, sample_wposet};
use posetlim::step::t_kernel_exact_step;
use posetlim::{Classification, Closure, Poset};

mod output;

use output::{fmt_g, manifest_path, svg_lines, write_csv, RunManifest};

type CliResult = Result<(), Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "posetlim",
    version,
    about = "Densities, W-random posets and cut distances"
)]
struct Cli {
    /// Reject poset files whose relations are not transitively closed.
    #[arg(long, global = true)]
    require_closed: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Inj,
    Ind,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Draw replicates of P(n, W) into a directory with a manifest.
    Sample {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Homomorphism density of one poset in another.
    Density {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Density of a poset in a kernel.
    KernelDensity {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sum over parts instead of sampling (finite-type kernels only).
        #[arg(long)]
        exact: bool,
    },
    /// Sample triples and check the kernel axioms.
    CheckKernel {
        #[arg(long)]
        kernel: String,
        #[arg(long, default_value_t = 100_000)]
        triples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
    },
    /// Decide whether a digraph is a strict partial order.
    Classify {
        #[arg(long)]
        digraph: PathBuf,
    },
    /// Bounds on the cut distance of two step functions.
    Cutdist {
        #[arg(long)]
        w1: PathBuf,
        #[arg(long)]
        w2: PathBuf,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_evaluations: usize,
    },
    /// Cut-distance bounds between sampled posets and their kernel.
    Converge {
        #[arg(long)]
        kernel: String,
        #[arg(long, value_delimiter = ',', default_value = "20,50,100,200")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: PathBuf,
        /// Also draw mean bounds against n.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        max_evaluations: usize,
    },
    /// The random graph order on n elements.
    GnpOrder {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare densities of a kernel and its thinning.
    Thin {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Prefixes read errors with the offending path.
fn load<T>(path: &Path, read: impl FnOnce(&Path) -> posetlim::Result<T>) -> Result<T, String> {
    read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_poset(path: &Path, closure: Closure) -> Result<Poset, String> {
    load(path, |p| read_poset(p, closure))
}

fn closure(cli: &Cli) -> Closure {
    if cli.require_closed {
        Closure::RequireClosed
    } else {
        Closure::TakeClosure
    }
}

fn estimate_row(e: &DensityEstimate) -> Vec<String> {
    vec![fmt_g(e.value), fmt_g(e.stderr), e.samples.to_string()]
}

fn print_estimate(e: &DensityEstimate) -> CliResult {
    write_csv(
        io::stdout().lock(),
        &["value", "stderr", "samples"],
        &[estimate_row(e)],
    )?;
    Ok(())
}

struct Sample {
    n: usize,
    reps: u64,
    seed: u64,
}

impl KernelVisitor for Sample {
    type Output = posetlim::Result<Vec<Poset>>;

    fn visit<K: Kernel>(self, kernel: &K) -> Self::Output {
        (0..self.reps)
            .into_par_iter()
            .map(|r| sample_wposet(kernel, self.n, &mut substream(self.seed, r)))
            .collect()
    }
}

struct Density<'a> {
    q: &'a Poset,
    samples: u64,
    seed: u64,
}

impl KernelVisitor for Density<'_> {
    type Output = DensityEstimate;

    fn visit<K: Kernel>(self, kernel: &K) -> DensityEstimate {
        t_kernel_mc(self.q, kernel, self.samples, self.seed)
    }
}

struct Axioms {
    triples: u64,
    seed: u64,
    tol: f64,
}

impl KernelVisitor for Axioms {
    type Output = AxiomReport;

    fn visit<K: Kernel>(self, kernel: &K) -> AxiomReport {
        check_axioms(kernel, self.triples, self.seed, self.tol)
    }
}

struct Thinning<'a> {
    q: &'a Poset,
    s: f64,
    samples: u64,
    seed: u64,
}

impl KernelVisitor for Thinning<'_> {
    type Output = posetlim::Result<(DensityEstimate, DensityEstimate)>;

    fn visit<K: Kernel>(self, kernel: &K) -> Self::Output {
        let base = t_kernel_mc(self.q, kernel, self.samples, self.seed);
        let thinned = t_kernel_mc(
            self.q,
            &thin(kernel, self.s)?,
            self.samples,
            self.seed.wrapping_add(1),
        );
        Ok((base, thinned))
    }
}

fn sample(kernel: &str, n: usize, reps: u64, seed: u64, out: &Path) -> CliResult {
    let mut manifest = RunManifest::start(seed);
    let kernel = NamedKernel::parse(kernel)?;
    let posets = kernel.visit(Sample { n, reps, seed })?;
    fs::create_dir_all(out)?;
    let width = reps.saturating_sub(1).to_string().len().max(4);
    let mut rows = Vec::new();
    for (r, p) in posets.iter().enumerate() {
        let name = format!("rep_{r:0width$}.json");
        let path = out.join(&name);
        fs::write(&path, poset_to_json(p) + "\n")?;
        rows.push(vec![
            r.to_string(),
            name,
            p.relation_count().to_string(),
            output::sha256_file(&path)?,
        ]);
    }
    let csv_path = out.join("manifest.csv");
    write_csv(
        fs::File::create(&csv_path)?,
        &["rep", "file", "relations", "sha256"],
        &rows,
    )?;
    manifest.add(&csv_path)?;
    manifest.finish(&out.join("manifest.json"))?;
    println!("wrote {} posets to {}", posets.len(), out.display());
    Ok(())
}

fn density(q: &Poset, p: &Poset, mode: Mode, samples: u64, seed: u64) -> CliResult {
    let estimate = match mode {
        Mode::Mc => t_mc(q, p, samples, seed),
        exact => {
            let r = match exact {
                Mode::Exact => t_exact(q, p)?,
                Mode::Inj => t_inj_exact(q, p)?,
                _ => t_ind_exact(q, p)?,
            };
            DensityEstimate {
                samples: r.total as u64,
                ..DensityEstimate::exact(r.value())
            }
        }
    };
    print_estimate(&estimate)
}

fn kernel_density(q: &Poset, kernel: &str, samples: u64, seed: u64, exact: bool) -> CliResult {
    let kernel = NamedKernel::parse(kernel)?;
    let e = if exact {
        DensityEstimate::exact(t_kernel_exact_step(q, &kernel.to_step()?)?)
    } else {
        kernel.visit(Density { q, samples, seed })
    };
    print_estimate(&e)
}

fn check_kernel(kernel: &str, triples: u64, seed: u64, tol: f64) -> CliResult {
    let report = NamedKernel::parse(kernel)?.visit(Axioms { triples, seed, tol });
    if report.pass() {
        println!("PASS");
    } else {
        println!(
            "FAIL support={} transitivity={} order={} range={} of {} triples",
            report.w1_violations,
            report.w2_violations,
            report.order_violations,
            report.range_violations,
            report.triples_checked
        );
        for w in &report.witnesses {
            println!("  {:?} at triple {}: {}", w.rule, w.triple, w.points);
        }
    }
    Ok(())
}

fn classify(path: &Path) -> CliResult {
    match load(path, |p| read_digraph(p))?.classify() {
        Classification::Poset => println!("POSET"),
        Classification::NotPoset(w) => {
            let labels: Vec<String> = w.labels.iter().map(|l| l.to_string()).collect();
            println!("NOT-POSET witness={} labels={}", w.kind, labels.join(","));
        }
    }
    Ok(())
}

fn cutdist(w1: &Path, w2: &Path, config: SearchConfig) -> CliResult {
    let (w1, w2) = (
        load(w1, |p| read_step_function(p))?,
        load(w2, |p| read_step_function(p))?,
    );
    let bounds = cut_distance_bounds(&w1, &w2, &default_family(), &config)?;
    println!("{}", serde_json::to_string(&bounds)?);
    Ok(())
}

fn converge(
    kernel: &str,
    sizes: &[usize],
    reps: u64,
    csv: &Path,
    svg: Option<&Path>,
    config: SearchConfig,
) -> CliResult {
    let mut manifest = RunManifest::start(config.seed);
    let target = NamedKernel::parse(kernel)?.to_step()?;
    let rows = converge_experiment(&target, sizes, reps, config.seed, &config)?;
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.rep.to_string(),
                fmt_g(r.t_inj_estimate),
                fmt_g(r.delta_upper),
                fmt_g(r.delta_lower),
            ]
        })
        .collect();
    let header = ["n", "rep", "t_inj_estimate", "delta_upper", "delta_lower"];
    write_csv(fs::File::create(csv)?, &header, &body)?;
    manifest.add(csv)?;
    if let Some(svg) = svg {
        let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let mean = |f: fn(&posetlim::cut::ConvergeRow) -> f64| -> Vec<f64> {
            sizes
                .iter()
                .map(|&n| {
                    let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).map(f).collect();
                    vals.iter().sum::<f64>() / vals.len().max(1) as f64
                })
                .collect()
        };
        let series = [
            ("delta upper", mean(|r| r.delta_upper)),
            ("delta lower", mean(|r| r.delta_lower)),
        ];
        fs::write(
            svg,
            svg_lines(&format!("cut distance to {kernel}"), &xs, &series),
        )?;
        manifest.add(svg)?;
    }
    manifest.finish(&manifest_path(csv))?;
    Ok(())
}

fn gnp(n: usize, p: f64, seed: u64, out: Option<&Path>) -> CliResult {
    let poset = gnp_order(n, p, &mut substream(seed, 0))?;
    let text = poset_to_json(&poset) + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn thinning(kernel: &str, s: f64, q: &Poset, samples: u64, seed: u64) -> CliResult {
    let (base, thinned) = NamedKernel::parse(kernel)?.visit(Thinning {
        q,
        s,
        samples,
        seed,
    })?;
    let active = (0..q.len())
        .filter(|&i| (0..q.len()).any(|j| q.comparable(i, j)))
        .count();
    let predicted = s.powi(active as i32) * base.value;
    let header = [
        "s",
        "base",
        "base_stderr",
        "thinned",
        "thinned_stderr",
        "predicted",
    ];
    let row = vec![
        fmt_g(s),
        fmt_g(base.value),
        fmt_g(base.stderr),
        fmt_g(thinned.value),
        fmt_g(thinned.stderr),
        fmt_g(predicted),
    ];
    write_csv(io::stdout().lock(), &header, &[row])?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let closure = closure(&cli);
    match cli.command {
        Command::Sample {
            kernel,
            n,
            reps,
            seed,
            out,
        } => sample(&kernel, n, reps, seed, &out),
        Command::Density {
            q,
            p,
            mode,
            samples,
            seed,
        } => density(
            &load_poset(&q, closure)?,
            &load_poset(&p, closure)?,
            mode,
            samples,
            seed,
        ),
        Command::KernelDensity {
            q,
            kernel,
            samples,
            seed,
            exact,
        } => kernel_density(&load_poset(&q, closure)?, &kernel, samples, seed, exact),
        Command::CheckKernel {
            kernel,
            triples,
            seed,
            tol,
        } => check_kernel(&kernel, triples, seed, tol),
        Command::Classify { digraph } => classify(&digraph),
        Command::Cutdist {
            w1,
            w2,
            restarts,
            seed,
            max_evaluations,
        } => cutdist(
            &w1,
            &w2,
            SearchConfig {
                restarts,
                seed,
                max_evaluations,
            },
        ),
        Command::Converge {
            kernel,
            sizes,
            reps,
            seed,
            csv,
            svg,
            restarts,
            max_evaluations,
        } => converge(
            &kernel,
            &sizes,
            reps,
            &csv,
            svg.as_deref(),
            SearchConfig {
                restarts,
                seed,
                max_evaluations,
            },
        ),
        Command::GnpOrder { n, p, seed, out } => gnp(n, p, seed, out.as_deref()),
        Command::Thin {
            kernel,
            s,
            q,
            samples,
            seed,
        } => thinning(&kernel, s, &load_poset(&q, closure)?, samples, seed),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("POSETLIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| format!("POSETLIM_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .map_err(Into::into)
        .and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error: {}",
                e.to_string().lines().next().unwrap_or_default()
            );
            ExitCode::from(1)
        }
    }
}
