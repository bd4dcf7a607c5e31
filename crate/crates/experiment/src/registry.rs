//! Problem lookup by name and per-problem default configurations.

use locbo::optimizer::{BoConfig, Method};
use locbo::problems::{self, Objective};
use locbo_rrm::problem::RrmSettings;
use locbo_rrm::{NetworkLayout, RrmProblem, REGISTRY_NAME};

use crate::error::{ExpError, Result};

pub fn problem_names() -> Vec<&'static str> {
    let mut names = problems::REGISTRY.to_vec();
    names.push(REGISTRY_NAME);
    names
}

pub fn method_names() -> Vec<&'static str> {
    Method::ALL.iter().map(|m| m.as_str()).collect()
}

pub fn problem(name: &str, rrm: Option<RrmSettings>) -> Result<Box<dyn Objective>> {
    if name == REGISTRY_NAME {
        let p = RrmProblem::new(NetworkLayout::standard(), rrm.unwrap_or_default())?;
        return Ok(Box::new(p));
    }
    if problems::REGISTRY.contains(&name) {
        return Ok(Box::new(problems::problem(name)?));
    }
    Err(ExpError::Unknown {
        kind: "problem",
        name: name.to_string(),
        known: problem_names().join(", "),
    })
}

pub fn method(name: &str) -> Result<Method> {
    name.parse().map_err(|_| ExpError::Unknown {
        kind: "method",
        name: name.to_string(),
        known: method_names().join(", "),
    })
}

/// Default configuration of `method` on `problem`.
pub fn preset(problem: &str, method: Method) -> BoConfig {
    if problem == REGISTRY_NAME {
        BoConfig::rrm(method)
    } else {
        BoConfig::synthetic(method)
    }
}
