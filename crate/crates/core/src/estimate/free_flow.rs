use serde::{Deserialize, Serialize};

use super::{EstimateError, Result};
use crate::dist::{GmmOptions, GmmParams};

/// Margin above the posted limit used as the base free-flow speed, m/s (5 mph).
pub const HCM_MARGIN: f64 = 2.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeFlowLinkModel {
    pub link_id: String,
    /// Posted limit, m/s.
    pub posted_limit: Option<f64>,
    /// Speed mixture after merging components that do not form separate modes.
    pub gmm: GmmParams,
    /// Mean of the highest-mean component, m/s.
    pub free_flow_mean: f64,
    /// Standard deviation of the highest-mean component, m/s.
    pub free_flow_sd: f64,
    /// Posted limit plus the margin, m/s.
    pub hcm_base: Option<f64>,
}

/// Free-flow speed of one link from its observed speeds.
///
/// A `K`-component mixture (3 by default) is fitted by EM; adjacent
/// components closer than the sum of their standard deviations are merged,
/// and the free-flow regime is the component with the highest mean.
pub fn free_flow_link_model(
    link_id: &str,
    speeds: &[f64],
    posted_limit: Option<f64>,
    opts: &GmmOptions,
) -> Result<FreeFlowLinkModel> {
    let floor = 10 * opts.components;
    if speeds.len() < floor {
        return Err(EstimateError::InsufficientData {
            what: format!("link {link_id}"),
            needed: floor,
            got: speeds.len(),
        });
    }
    let fit = GmmParams::fit_em(speeds, opts)?;
    let gmm = fit.params.merge_overlapping();
    let top = gmm.highest_mean_component();
    let free_flow_mean = gmm.means[top];
    if !(free_flow_mean > 0.0) {
        return Err(EstimateError::InvalidInput(format!(
            "link {link_id}: free-flow component mean {free_flow_mean} is not positive"
        )));
    }
    Ok(FreeFlowLinkModel {
        link_id: link_id.to_string(),
        posted_limit,
        free_flow_sd: gmm.variances[top].sqrt(),
        free_flow_mean,
        gmm,
        hcm_base: posted_limit.map(|p| p + HCM_MARGIN),
    })
}
