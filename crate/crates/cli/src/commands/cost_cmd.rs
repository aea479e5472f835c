//! `cost`: step counts for an arithmetic expression under the three
//! encryption regimes, with an optional fusion plan.

use basedlab_core::defaults;
use basedlab_core::fhe_cost::{cost_with, fusion_plan, parse_expression, CostMode, CostOptions};
use clap::ValueEnum;
use serde_json::json;

use crate::errors::{AppError, AppResult};
use crate::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    All,
    Standard,
    Fhe,
    Cerberus,
}

pub struct CostArgs {
    pub expression: String,
    pub mode: ModeArg,
    pub plan: bool,
    pub distinct_leaves: bool,
}

pub fn run(args: CostArgs, format: OutputFormat) -> AppResult<String> {
    let ast = parse_expression(&args.expression).map_err(AppError::validation)?;
    let options = CostOptions {
        distinct_leaves: args.distinct_leaves,
    };
    let standard = cost_with(&ast, CostMode::Standard, &options);
    let fhe = cost_with(&ast, CostMode::Fhe, &options);
    let cerberus = cost_with(&ast, CostMode::CerberusSqueezed, &options);
    let plan = (args.plan || args.mode == ModeArg::Cerberus).then(|| fusion_plan(&ast));

    match format {
        OutputFormat::Json => {
            let mut body = json!({
                "defaults": defaults::provenance_line(),
                "expression": args.expression,
                "normalized": ast.to_infix(),
            });
            let obj = body.as_object_mut().expect("object");
            match args.mode {
                ModeArg::All => {
                    obj.insert("standard".into(), json!(standard));
                    obj.insert("fhe".into(), json!(fhe));
                    obj.insert("cerberus".into(), json!(cerberus));
                }
                ModeArg::Standard => {
                    obj.insert("standard".into(), json!(standard));
                }
                ModeArg::Fhe => {
                    obj.insert("fhe".into(), json!(fhe));
                }
                ModeArg::Cerberus => {
                    obj.insert("cerberus".into(), json!(cerberus));
                }
            }
            if let Some(plan) = &plan {
                obj.insert("plan".into(), json!(plan.render()));
            }
            Ok(serde_json::to_string_pretty(&body).expect("json"))
        }
        _ => {
            let mut out = format!("# {}\n", defaults::provenance_line());
            out.push_str(&format!("expression: {}\n", ast.to_infix()));
            match args.mode {
                ModeArg::All => {
                    out.push_str(&format!(
                        "standard={standard} fhe={fhe} cerberus={cerberus}\n"
                    ));
                }
                ModeArg::Standard => out.push_str(&format!("standard={standard}\n")),
                ModeArg::Fhe => out.push_str(&format!("fhe={fhe}\n")),
                ModeArg::Cerberus => out.push_str(&format!("cerberus={cerberus}\n")),
            }
            if let Some(plan) = &plan {
                out.push_str("fusion plan:\n");
                for line in plan.render() {
                    out.push_str(&format!("  {line}\n"));
                }
            }
            Ok(out)
        }
    }
}
