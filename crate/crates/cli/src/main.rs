//! `dehnlab`: command-line driver for the filling-area laboratory.
//!
//! One subcommand per pipeline stage: exact van Kampen areas, profile
//! tabulation, skeleton pushing, degree extraction, profile comparison,
//! and the paired equivalence report. Exit code 0 on success, 2 when a
//! requested certification fails, 1 on every other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dehn_core::degree::{combinatorial_area_from_geometric, write_degree_field_json};
use dehn_core::filling::{vk_area, Area};
use dehn_core::geom::{
    build_grid_e2, build_h2_tiling, combinatorialize_loop, read_chain_json, read_mesh_json,
    two_chain_boundary,
};
use dehn_core::lab::{
    check_precedes, combinatorial_profile, equivalence_report, geometric_profile, profiles_svg,
    report_json, LoopFamily, PairKind, PrecedesOutcome, ProfileTable, SearchGrid,
};
use dehn_core::push::{push_chain, write_push_report, PushConfig};
use dehn_core::{GroupModel, Presentation, Word};

#[derive(Parser)]
#[command(name = "dehnlab", version, about = "Filling-area laboratory for group presentations and triangulated model geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact minimal van Kampen area of a null word
    Area {
        /// Presentation file (`gens: a b` / `rels: abAB`)
        #[arg(long)]
        pres: PathBuf,
        /// Word over the declared generators, uppercase = inverse
        #[arg(long)]
        word: String,
        /// Search-node budget before giving up
        #[arg(long, default_value_t = 2_000_000)]
        budget: u64,
    },
    /// Tabulate a filling profile and write it as CSV
    Profile {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum)]
        target: Target,
        /// Largest length bound tabulated
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving profile-<mode>-<target>.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Push a chain into the skeleton of a mesh and write the report
    Push {
        /// Mesh JSON (model, vertices, simplices, deck)
        #[arg(long)]
        mesh: PathBuf,
        /// Chain JSON (dim, pieces)
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the cellular degree field of a 2-chain filling
    Degree {
        #[arg(long)]
        mesh: PathBuf,
        /// Dim-2 chain JSON; its boundary is recovered and straightened
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Degree-field JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for an `f precedes g` certificate between two profile CSVs
    Compare {
        /// Left profile CSV (the dominated side)
        f: PathBuf,
        /// Right profile CSV (the dominating side)
        g: PathBuf,
        /// Search grid name; only `default` is built in
        #[arg(long, default_value = "default")]
        grid: String,
        /// Certificate JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Full two-sided equivalence report for a built-in pair
    Report {
        #[arg(long, value_enum)]
        pair: Pair,
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving report.json, comb.csv, geom.csv, profiles.svg
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Comb,
    Geom,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Z2,
    F2,
    Genus2,
    Grid,
    H2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pair {
    Flat,
    Hyperbolic,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<dehn_core::Error>() {
                Some(dehn_core::Error::Certification(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Area { pres, word, budget } => cmd_area(&pres, &word, budget),
        Command::Profile { mode, target, nmax, seed, out } => {
            cmd_profile(mode, target, nmax, seed, &out)
        }
        Command::Push { mesh, chain, seed, out } => cmd_push(&mesh, &chain, seed, &out),
        Command::Degree { mesh, chain, seed, out } => cmd_degree(&mesh, &chain, seed, &out),
        Command::Compare { f, g, grid, out } => cmd_compare(&f, &g, &grid, &out),
        Command::Report { pair, nmax, seed, out } => cmd_report(pair, nmax, seed, &out),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_area(pres: &Path, word: &str, budget: u64) -> Result<ExitCode> {
    let p = Presentation::parse(&read_file(pres)?)?;
    let w = Word::parse(word)?;
    let result = vk_area(&w, &p, budget)?;
    match result.area {
        Area::Exact(n) => {
            let moves = result.witness.as_ref().map_or(0, Vec::len);
            println!("area {n} ({moves} relator insertions)");
        }
        Area::Exceeded(b) => println!("area exceeds budget {b}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_profile(mode: Mode, target: Target, nmax: usize, seed: u64, out: &Path) -> Result<ExitCode> {
    let config = PushConfig { seed, ..PushConfig::default() };
    let (table, label) = match (mode, target) {
        (Mode::Comb, Target::Z2) => {
            (combinatorial_profile(&GroupModel::free_abelian(2), nmax, 2_000_000)?, "comb-z2")
        }
        (Mode::Comb, Target::F2) => {
            (combinatorial_profile(&GroupModel::free(2), nmax, 2_000_000)?, "comb-f2")
        }
        (Mode::Comb, Target::Genus2) => {
            (combinatorial_profile(&GroupModel::surface_genus2(), nmax, 2_000_000)?, "comb-genus2")
        }
        (Mode::Geom, Target::Grid) => (
            geometric_profile(&build_grid_e2(7)?, LoopFamily::GridLoops, nmax, seed, &config)?,
            "geom-grid",
        ),
        (Mode::Geom, Target::H2) => (
            geometric_profile(&build_h2_tiling(2)?, LoopFamily::OctagonLoops, nmax, seed, &config)?,
            "geom-h2",
        ),
        (Mode::Comb, _) => bail!("combinatorial targets are z2, f2, genus2"),
        (Mode::Geom, _) => bail!("geometric targets are grid, h2"),
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join(format!("profile-{label}.csv")), &table.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_push(mesh: &Path, chain: &Path, seed: u64, out: &Path) -> Result<ExitCode> {
    let patch = read_mesh_json(&read_file(mesh)?)?;
    let t = read_chain_json(&read_file(chain)?)?;
    let outcome = push_chain(&t, &patch, &PushConfig { seed, ..PushConfig::default() })?;
    write_file(out, &write_push_report(&outcome))?;
    println!(
        "pushed dim-{} chain: volume {:.6} -> {:.6}, certified blowup bound {:.3}, measured {:.3}",
        t.dim, outcome.vol_input, outcome.vol_result, outcome.v0_effective, outcome.empirical_c
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_degree(mesh: &Path, chain: &Path, seed: u64, out: &Path) -> Result<ExitCode> {
    let patch = read_mesh_json(&read_file(mesh)?)?;
    let filling = read_chain_json(&read_file(chain)?)?;
    let rim = two_chain_boundary(&filling)?;
    let (lp, _) = combinatorialize_loop(&rim, &patch)?;
    let config = PushConfig { seed, ..PushConfig::default() };
    let (area, field) = combinatorial_area_from_geometric(&lp, &filling, &patch, &config)?;
    write_file(out, &write_degree_field_json(&field))?;
    println!("combinatorial area {area} over {} cells", field.chain.coefficients.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(f: &Path, g: &Path, grid: &str, out: &Path) -> Result<ExitCode> {
    if grid != "default" {
        bail!("unknown search grid {grid:?}; only `default` is built in");
    }
    let left = ProfileTable::from_csv(&read_file(f)?)?;
    let right = ProfileTable::from_csv(&read_file(g)?)?;
    let outcome = check_precedes(&left, &right, &SearchGrid::default_grid())?;
    let json = serde_json::to_string_pretty(&outcome).context("encoding certificate")?;
    write_file(out, &(json + "\n"))?;
    match &outcome {
        PrecedesOutcome::Certified(c) => {
            println!(
                "certified on [{}, {}]: A={} B={} C={} D={} E={} (slack {:.3})",
                c.n_lo, c.n_hi, c.a, c.b, c.c, c.d, c.e, c.slack
            );
            Ok(ExitCode::SUCCESS)
        }
        PrecedesOutcome::Failed(w) => {
            println!("no grid point certifies; worst sample n={} violates by {:.3}", w.n, w.violation);
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_report(pair: Pair, nmax: usize, seed: u64, out: &Path) -> Result<ExitCode> {
    let kind = match pair {
        Pair::Flat => PairKind::Flat,
        Pair::Hyperbolic => PairKind::Hyperbolic,
    };
    let report = equivalence_report(kind, nmax, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("report.json"), &report_json(&report)?)?;
    write_file(&out.join("comb.csv"), &report.comb.to_csv())?;
    write_file(&out.join("geom.csv"), &report.geom.to_csv())?;
    write_file(&out.join("profiles.svg"), &profiles_svg(&report))?;
    let dir = |b: bool| if b { "certified" } else { "FAILED" };
    println!(
        "{}: comb precedes geom {}, geom precedes comb {}",
        report.pair,
        dir(report.comb_precedes_geom.is_certified()),
        dir(report.geom_precedes_comb.is_certified())
    );
    if report.equivalent {
        println!("profiles equivalent on the sampled range");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("equivalence NOT certified on the sampled range");
        Ok(ExitCode::from(2))
    }
}
