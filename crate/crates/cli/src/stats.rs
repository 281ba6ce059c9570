use elastoct_core::stats::reference::reproduce_reference;
use elastoct_core::stats::{
    chi_square_2x2, fisher_exact_2x2, format_p, noninferiority_sample_size, ContingencyTable2x2, NoninferiorityDesign,
};
use serde_json::json;

use crate::args::{Format, StatsArgs, StatsCommand, TableArgs};
use crate::{usage, Outcome};

fn table(t: &TableArgs) -> ContingencyTable2x2 {
    ContingencyTable2x2::new(t.a, t.b, t.c, t.d)
}

fn emit(format: Format, value: serde_json::Value, text: String) -> Outcome {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&value)?),
        Format::Text => println!("{text}"),
    }
    Ok(())
}

pub fn run(a: StatsArgs, format: Format) -> Outcome {
    match a.command {
        StatsCommand::Chi2 { table: t, no_yates } => {
            let r = chi_square_2x2(&table(&t), !no_yates).map_err(|e| usage(e.to_string()))?;
            emit(
                format,
                json!({ "statistic": r.statistic, "p_value": r.p_value, "yates": !no_yates }),
                format!("chi2 = {:.6}  p = {:.6}  ({})", r.statistic, r.p_value, format_p(r.p_value)),
            )
        }
        StatsCommand::Fisher { table: t } => {
            let p = fisher_exact_2x2(&table(&t));
            emit(
                format,
                json!({ "p_value": p }),
                format!("p = {p:.6}  ({})", format_p(p)),
            )
        }
        StatsCommand::Samplesize {
            p_std,
            p_test,
            margin,
            alpha,
            power,
        } => {
            let design =
                NoninferiorityDesign::new(p_std, p_test, margin, alpha, power).map_err(|e| usage(e.to_string()))?;
            let n = noninferiority_sample_size(&design)?;
            emit(format, json!({ "design": design, "per_group": n, "total": 2 * n }), n.to_string())
        }
        StatsCommand::Reference => {
            let rows = reproduce_reference();
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
                Format::Text => {
                    println!(
                        "{:<5} {:<6} {:<7} {:>4} {:>4}  {:<6} {:>10} {:>6}  {:<16} agrees",
                        "table", "grader", "cat", "TN", "FN", "ref", "p", "shown", "test"
                    );
                    for r in rows {
                        let c = r.cell;
                        println!(
                            "{:<5} {:<6} {:<7} {:>4} {:>4}  {:<6} {:>10.3e} {:>6}  {:<16} {}",
                            c.table,
                            c.grader,
                            c.category,
                            c.tn,
                            c.fn_,
                            c.reported_p,
                            r.p_value,
                            format_p(r.p_value),
                            r.test_used.to_string(),
                            if r.agrees { "yes" } else { "no" }
                        );
                    }
                }
            }
            Ok(())
        }
    }
}
