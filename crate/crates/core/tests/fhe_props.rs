//! Property checks for the expression parser and step-cost model.

use basedlab_core::fhe_cost::{cost, fusion_plan, parse_expression, CostMode, ExprNode};
use basedlab_core::util::SplitMix64;

fn random_ast(rng: &mut SplitMix64, depth: u32) -> ExprNode {
    if depth == 0 || rng.next_f64() < 0.3 {
        let name = format!("v{}", rng.next_below(12));
        return ExprNode::Var(name);
    }
    let left = Box::new(random_ast(rng, depth - 1));
    let right = Box::new(random_ast(rng, depth - 1));
    if rng.next_f64() < 0.5 {
        ExprNode::Add(left, right)
    } else {
        ExprNode::Mul(left, right)
    }
}

/// Independent node counter walking the tree iteratively.
fn count_nodes(ast: &ExprNode) -> (u64, u64) {
    let mut leaves = 0;
    let mut internals = 0;
    let mut stack = vec![ast];
    while let Some(node) = stack.pop() {
        match node {
            ExprNode::Var(_) => leaves += 1,
            ExprNode::Add(l, r) | ExprNode::Mul(l, r) => {
                internals += 1;
                stack.push(l);
                stack.push(r);
            }
        }
    }
    (leaves, internals)
}

#[test]
fn fhe_cost_equals_leaves_plus_internals() {
    let mut rng = SplitMix64::new(2024);
    for _ in 0..500 {
        let ast = random_ast(&mut rng, 10);
        let (leaves, internals) = count_nodes(&ast);
        assert_eq!(cost(&ast, CostMode::Fhe), leaves + internals);
    }
}

#[test]
fn squeezed_cost_never_exceeds_fhe_cost() {
    let mut rng = SplitMix64::new(2025);
    for _ in 0..500 {
        let ast = random_ast(&mut rng, 10);
        let fhe = cost(&ast, CostMode::Fhe);
        let squeezed = cost(&ast, CostMode::CerberusSqueezed);
        assert!(squeezed <= fhe);
        // Equality only for a bare variable.
        if squeezed == fhe {
            assert!(matches!(ast, ExprNode::Var(_)));
        }
        assert_eq!(cost(&ast, CostMode::Standard), 1);
    }
}

#[test]
fn parse_render_roundtrip_is_identity() {
    let mut rng = SplitMix64::new(2026);
    for _ in 0..500 {
        let ast = random_ast(&mut rng, 8);
        let rendered = ast.to_infix();
        let reparsed = parse_expression(&rendered).unwrap();
        assert_eq!(ast, reparsed, "render {rendered:?}");
    }
}

#[test]
fn plan_length_equals_squeezed_cost() {
    let mut rng = SplitMix64::new(2027);
    for _ in 0..500 {
        let ast = random_ast(&mut rng, 9);
        let plan = fusion_plan(&ast);
        assert_eq!(plan.len() as u64, cost(&ast, CostMode::CerberusSqueezed));
        // Every leaf occurrence is absorbed by exactly one step.
        let absorbed: u64 = plan
            .steps
            .iter()
            .map(|s| s.absorbed_leaves().len() as u64)
            .sum();
        assert_eq!(absorbed, ast.leaf_count());
    }
}
