//! Plays one campaign by hand, picking the cheapest affordable user each
//! stage.

use debunk::env::{Action, Campaign, CampaignConfig};
use debunk::scenario::{Scenario, SyntheticConfig};

fn main() -> debunk::Result<()> {
    let scenario = Scenario::synthetic(&SyntheticConfig { n: 30, ..SyntheticConfig::default() }, 2)?;
    let config = CampaignConfig::default();
    let mut campaign = Campaign::new(&scenario, &config, 11)?;
    while !campaign.is_done() {
        let budget = campaign.budget();
        let pick = (0..scenario.n())
            .filter(|&i| !scenario.is_spreader(i) && scenario.costs()[i] <= budget)
            .min_by(|&a, &b| scenario.costs()[a].total_cmp(&scenario.costs()[b]));
        let stage = campaign.stage();
        let out = campaign.step(&Action::new(pick.into_iter().collect()))?;
        println!("stage {stage}: budget {budget:.2}, debunker {pick:?}, reward {:.4}", out.reward);
    }
    println!("discounted return {:.4}", campaign.discounted_return());
    Ok(())
}
