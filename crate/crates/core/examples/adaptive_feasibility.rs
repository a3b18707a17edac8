// Deciding a chance constraint from bounds before all laces are exact.

use pcbsp::belief_tree::{LaceSource, SyntheticLaces};
use pcbsp::constraint_eval::{adaptive_feasibility, ConstraintSpec, Form};

fn main() -> pcbsp::Result<()> {
    // 100 laces, 7 of which end below zero.
    let values: Vec<Vec<f64>> = (0..100)
        .map(|l| if l % 14 == 3 { vec![-0.2, 0.1] } else { vec![0.3, 0.2] })
        .collect();
    for epsilon in [0.02, 0.1, 0.5] {
        let spec = ConstraintSpec::new(Form::Cumulative, 0.0, epsilon)?;
        let mut laces = SyntheticLaces::new(1, values.clone(), 0.2, 2);
        let eval = adaptive_feasibility(&mut laces, &spec)?;
        println!(
            "epsilon {epsilon}: {} after expanding {} of {} laces",
            eval.verdict,
            laces.expanded(),
            laces.budget()
        );
        for row in eval.trace.iter().step_by(20) {
            println!("  iteration {:>3}: lb {:.3} ub {:.3}", row.iteration, row.lb, row.ub);
        }
    }
    Ok(())
}
