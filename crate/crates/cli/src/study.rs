use std::io::Write;
use std::sync::Arc;

use elastoct_core::session::load_sessions;
use elastoct_core::stats::analyze_study;
use elastoct_core::study::{build_study, refined_design, standard_design, BuildOptions, GroundTruth, StudyManifest};
use elastoct_service::{AppState, ServiceConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Design, Format, StudyAnalyzeArgs, StudyArgs, StudyBuildArgs, StudyCommand, StudyRevealArgs, StudyServeArgs,
};
use crate::imaging::image_files;
use crate::{runtime, Outcome};

pub fn run(a: StudyArgs, format: Format) -> Outcome {
    match a.command {
        StudyCommand::Build(a) => build(a, format),
        StudyCommand::Serve(a) => serve(a),
        StudyCommand::Analyze(a) => analyze(a, format),
        StudyCommand::Reveal(a) => reveal(a, format),
    }
}

#[derive(Serialize)]
struct CategoryCount<'a> {
    name: &'a str,
    sigma_min: f64,
    sigma_max: f64,
    originals: usize,
    modified: usize,
}

fn build(a: StudyBuildArgs, format: Format) -> Outcome {
    let specs = match (a.design, a.category.is_empty()) {
        (_, false) => a.category,
        (Some(Design::Refined), true) => refined_design(),
        (Some(Design::Standard) | None, true) => standard_design(),
    };
    let pool = image_files(&a.pool_dir)?;
    let options = BuildOptions {
        grid: (a.warp.grid.0, a.warp.grid.1),
        border: a.warp.border,
    };
    let m = build_study(&pool, &specs, a.seed, &a.out_dir, &options)?;
    let counts: Vec<CategoryCount> = m
        .categories
        .iter()
        .map(|c| {
            let of = |gt| m.items.iter().filter(|it| it.category == c.name && it.ground_truth == gt).count();
            CategoryCount {
                name: &c.name,
                sigma_min: c.sigma_min,
                sigma_max: c.sigma_max,
                originals: of(GroundTruth::Original),
                modified: of(GroundTruth::Modified),
            }
        })
        .collect();
    match format {
        Format::Json => {
            let out = json!({
                "study_id": m.study_id,
                "out_dir": a.out_dir,
                "item_count": m.item_count(),
                "categories": counts,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Format::Text => {
            println!("study {}: {} items in {}", m.study_id, m.item_count(), a.out_dir.display());
            for c in counts {
                println!(
                    "  {:<8} sigma {:>5}..{:<5} {} original + {} modified",
                    c.name, c.sigma_min, c.sigma_max, c.originals, c.modified
                );
            }
        }
    }
    Ok(())
}

fn serve(a: StudyServeArgs) -> Outcome {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let state = AppState::load(&ServiceConfig {
        studies: a.studies,
        sessions_dir: a.sessions_dir,
        admin_token: a.admin_token,
    })?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.addr).await?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        elastoct_service::serve(listener, Arc::new(state), shutdown).await
    })?;
    Ok(())
}

fn analyze(a: StudyAnalyzeArgs, format: Format) -> Outcome {
    let manifest = StudyManifest::load_dir(&a.study)?;
    let mut sessions = Vec::new();
    for s in load_sessions(&a.sessions_dir)? {
        if s.study_id() != manifest.study_id {
            continue;
        }
        if !s.is_finished() {
            eprintln!("skipping unfinished session {}", s.session_id());
            continue;
        }
        sessions.push(s);
    }
    if sessions.is_empty() {
        return Err(runtime(format!(
            "no finished sessions for study {} in {}",
            manifest.study_id,
            a.sessions_dir.display()
        )));
    }
    sessions.sort_by(|x, y| {
        x.created_at()
            .cmp(&y.created_at())
            .then_with(|| x.session_id().cmp(y.session_id()))
    });
    let report = analyze_study(&manifest, &sessions)?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Text => print!("{}", report.render_table()),
    }
    Ok(())
}

fn reveal(a: StudyRevealArgs, format: Format) -> Outcome {
    let manifest = StudyManifest::load_dir(&a.study)?;
    let (truth, sigma) = manifest.reveal(&a.item)?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "item_id": a.item, "ground_truth": truth, "sigma_used": sigma }))?
        ),
        Format::Text => match sigma {
            Some(s) => println!("modified (sigma {s})"),
            None => println!("original"),
        },
    }
    Ok(())
}
