//! Training entry point: solve the MIP and package the result as a scoring system.

use crate::error::Result;
use crate::fairness::fairness_level_all;
use crate::mip::{build, Problem, SolveMode};
use crate::model::{loss_vector_for, ScoringSystem, SystemMetadata};
use crate::solver::{solve, solve_lexicographic, Solution, SolverConfig};
use crate::Rational;

#[derive(Debug, Clone)]
pub struct Fit {
    /// `None` when the solver found no feasible point.
    pub system: Option<ScoringSystem>,
    pub solution: Solution,
    /// Loss indicators recomputed from the coefficients.
    pub psi: Vec<bool>,
    /// Fairness level of `psi` under the problem's notion, when defined.
    pub achieved_delta: Option<Rational>,
}

/// Solves `problem` and returns the trained system. With `lexicographic`,
/// ties in the objective are broken toward the smallest δ.
pub fn fit(problem: &Problem, config: &SolverConfig, lexicographic: bool) -> Result<Fit> {
    problem.validate()?;
    let model = build(problem)?;
    let solution = if lexicographic {
        solve_lexicographic(&model, config)?
    } else {
        solve(&model, config)?
    };
    if !solution.is_feasible() {
        return Ok(Fit {
            system: None,
            solution,
            psi: Vec::new(),
            achieved_delta: None,
        });
    }
    // with one-sided linking the solver's ψ may overstate errors; report the true ones
    let psi = loss_vector_for(&solution.w_star, &problem.dataset)?;
    let indices = problem.group_indices();
    let achieved_delta = fairness_level_all::<Rational>(problem.notion, &psi, &indices).ok();
    let mut system = ScoringSystem::new(
        solution.w_star.clone(),
        problem.omega.clone(),
        problem.gamma.clone(),
        problem.dataset.feature_names().to_vec(),
    )?;
    system.metadata = SystemMetadata {
        notion: (problem.mode != SolveMode::AccuracyOnly).then_some(problem.notion),
        mode: Some(problem.mode.to_string()),
        delta: achieved_delta.clone(),
        objective: solution.objective.clone(),
        status: Some(solution.status.to_string()),
    };
    Ok(Fit {
        system: Some(system),
        solution,
        psi,
        achieved_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::FairnessNotion;
    use crate::mip::LossLinking;
    use crate::model::Dataset;
    use crate::scalar::ratio;
    use crate::welfare::WelfareParams;

    fn problem() -> Problem {
        let ds = Dataset::from_integers(
            &[vec![1, 1, 0], vec![1, 0, 1], vec![1, 1, 1], vec![1, 0, 0], vec![1, 1, 0], vec![1, 0, 1]],
            vec![1, -1, 1, -1, -1, 1],
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        let params = WelfareParams::unit(6).with_rho_bar(ratio(1, 2)).with_penalties(ratio(1, 1000), ratio(1, 1000));
        Problem::new(ds, params, FairnessNotion::Omr).with_uniform_omega(3)
    }

    #[test]
    fn fit_fills_metadata() {
        let f = fit(&problem(), &SolverConfig::default(), false).unwrap();
        let sys = f.system.unwrap();
        assert_eq!(sys.metadata.notion, Some(FairnessNotion::Omr));
        assert_eq!(sys.metadata.mode.as_deref(), Some("joint"));
        assert_eq!(sys.metadata.delta, f.achieved_delta);
        assert_eq!(f.solution.delta_star, f.achieved_delta);
    }

    #[test]
    fn one_sided_linking_reports_true_losses() {
        let p = problem().with_linking(LossLinking::OneSided);
        let f = fit(&p, &SolverConfig::default(), false).unwrap();
        let w = &f.system.as_ref().unwrap().coefficients;
        assert_eq!(f.psi, loss_vector_for(w, &p.dataset).unwrap());
    }
}
