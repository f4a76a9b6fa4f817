use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chi2::chi_squared_upper_tail;
use super::{require_kind, StatsError};
use crate::clustering::{ClusterId, Partition};
use crate::graph::{AttrKind, AttrValue, Network, NodeIdx};

/// Expected counts below this flag a cluster as low-count.
pub const LOW_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalDistribution {
    pub attribute: String,
    pub categories: Vec<String>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl CategoricalDistribution {
    pub fn count(&self, category: &str) -> Option<u64> {
        self.categories
            .iter()
            .position(|c| c == category)
            .map(|i| self.counts[i])
    }
}

/// Counts of a categorical attribute over `scope`, skipping missing values.
/// Categories are every value the attribute takes anywhere in `net`.
pub fn attribute_distribution(
    net: &Network,
    scope: &[NodeIdx],
    attribute: &str,
) -> Result<CategoricalDistribution, StatsError> {
    require_kind(net, attribute, AttrKind::Categorical)?;
    let categories = net.categories(attribute);
    let mut counts = vec![0u64; categories.len()];
    for &n in scope {
        if let Some(AttrValue::Categorical(v)) = net.attribute(n, attribute) {
            let i = categories.binary_search(v).expect("category listed");
            counts[i] += 1;
        }
    }
    Ok(CategoricalDistribution {
        attribute: attribute.to_owned(),
        total: counts.iter().sum(),
        categories,
        counts,
    })
}

/// What a cluster is compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalReference {
    /// The whole scope, the tested cluster included.
    #[default]
    IncludeCluster,
    /// The scope minus the tested cluster.
    ExcludeCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTest {
    pub cluster: ClusterId,
    /// Members with a value for the attribute.
    pub n: u64,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Pearson residual per category with positive expected count.
    pub residuals: BTreeMap<String, f64>,
    /// Some expected count is below [`LOW_EXPECTED_COUNT`].
    pub low_count: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOverlay {
    pub attribute: String,
    pub reference: GlobalReference,
    /// Scope-wide distribution the clusters are tested against.
    pub global: CategoricalDistribution,
    pub clusters: Vec<ClusterTest>,
}

impl TestOverlay {
    /// Categories that carry residuals (positive scope-wide count).
    pub fn tested_categories(&self) -> Vec<&str> {
        self.global
            .categories
            .iter()
            .zip(&self.global.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(name, _)| name.as_str())
            .collect()
    }
}

pub fn chi_squared_overlay(
    net: &Network,
    p: &Partition,
    attribute: &str,
) -> Result<TestOverlay, StatsError> {
    chi_squared_overlay_with(net, p, attribute, GlobalReference::IncludeCluster)
}

/// Per-cluster goodness-of-fit of the attribute against the scope-wide
/// proportions, with Pearson residuals.
pub fn chi_squared_overlay_with(
    net: &Network,
    p: &Partition,
    attribute: &str,
    reference: GlobalReference,
) -> Result<TestOverlay, StatsError> {
    let global = attribute_distribution(net, p.scope(), attribute)?;
    let positive = global.counts.iter().filter(|&&c| c > 0).count();
    if positive < 2 {
        return Err(StatsError::DegenerateGlobal {
            attribute: attribute.to_owned(),
            categories: positive,
        });
    }
    let clusters = p
        .clusters()
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let observed = attribute_distribution(net, members, attribute)?;
            let baseline: Vec<u64> = match reference {
                GlobalReference::IncludeCluster => global.counts.clone(),
                GlobalReference::ExcludeCluster => global
                    .counts
                    .iter()
                    .zip(&observed.counts)
                    .map(|(g, o)| g - o)
                    .collect(),
            };
            Ok(test_cluster(
                c,
                &global.categories,
                &observed.counts,
                &baseline,
            ))
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    Ok(TestOverlay {
        attribute: attribute.to_owned(),
        reference,
        global,
        clusters,
    })
}

fn test_cluster(
    cluster: ClusterId,
    categories: &[String],
    observed: &[u64],
    baseline: &[u64],
) -> ClusterTest {
    let n: u64 = observed.iter().sum();
    let base_total: u64 = baseline.iter().sum();
    let tested = baseline.iter().filter(|&&c| c > 0).count();
    let df = tested.saturating_sub(1) as u32;
    if n == 0 || base_total == 0 || df == 0 {
        return ClusterTest {
            cluster,
            n,
            statistic: 0.0,
            df,
            p_value: 1.0,
            residuals: BTreeMap::new(),
            low_count: false,
        };
    }
    let mut statistic = 0.0;
    let mut residuals = BTreeMap::new();
    let mut low_count = false;
    for ((name, &o), &b) in categories.iter().zip(observed).zip(baseline) {
        if b == 0 {
            continue;
        }
        let expected = n as f64 * (b as f64 / base_total as f64);
        let r = (o as f64 - expected) / expected.sqrt();
        statistic += r * r;
        low_count |= expected < LOW_EXPECTED_COUNT;
        residuals.insert(name.clone(), r);
    }
    ClusterTest {
        cluster,
        n,
        statistic,
        df,
        p_value: chi_squared_upper_tail(statistic, df),
        residuals,
        low_count,
    }
}

/// Labels every cluster by its verdict for one category: atypical with more
/// than expected (`over:<category>`), atypical with fewer
/// (`under:<category>`), or `typical`.
pub fn auto_groups(
    overlay: &TestOverlay,
    category: &str,
    alpha: f64,
) -> Result<BTreeMap<ClusterId, String>, StatsError> {
    if !overlay.tested_categories().contains(&category) {
        return Err(StatsError::UnknownCategory {
            attribute: overlay.attribute.clone(),
            category: category.to_owned(),
        });
    }
    Ok(overlay
        .clusters
        .iter()
        .map(|t| {
            let label = match t.residuals.get(category) {
                Some(&r) if t.p_value < alpha && r > 0.0 => format!("over:{category}"),
                Some(&r) if t.p_value < alpha && r < 0.0 => format!("under:{category}"),
                _ => "typical".to_string(),
            };
            (t.cluster, label)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeDecl, NodeRecord, Schema};

    fn labeled(values: &[Option<&str>]) -> Network {
        let schema: Schema = [("kind".to_string(), AttrKind::Categorical)].into();
        let nodes = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let r = NodeRecord::new(format!("n{i:03}"));
                match v {
                    Some(v) => r.with("kind", AttrValue::Categorical(v.to_string())),
                    None => r,
                }
            })
            .collect();
        // A path keeps modularity defined.
        let decls =
            (1..values.len()).map(|i| EdgeDecl::new(format!("n{:03}", i - 1), format!("n{i:03}")));
        Network::build(schema, nodes, decls).unwrap()
    }

    #[test]
    fn distribution_skips_missing() {
        let g = labeled(&[Some("A"), Some("A"), Some("B"), None]);
        let d = attribute_distribution(&g, &[0, 1, 2, 3], "kind").unwrap();
        assert_eq!(d.categories, vec!["A", "B"]);
        assert_eq!(d.counts, vec![2, 1]);
        assert_eq!(d.total, 3);
        let d = attribute_distribution(&g, &[3], "kind").unwrap();
        assert_eq!(d.total, 0);
        assert_eq!(
            attribute_distribution(&g, &[0], "nope"),
            Err(StatsError::UnknownAttribute("nope".into()))
        );
    }

    #[test]
    fn proportional_cluster_is_typical() {
        let g = labeled(&[Some("A"), Some("B"), Some("A"), Some("B")]);
        let p = Partition::from_clusters(&g, &[vec![0, 1], vec![2, 3]]).unwrap();
        let o = chi_squared_overlay(&g, &p, "kind").unwrap();
        for t in &o.clusters {
            assert_eq!(t.statistic, 0.0);
            assert_eq!(t.p_value, 1.0);
            assert!(t.residuals.values().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn skewed_cluster_against_even_global() {
        let mut values = vec![Some("A"); 10];
        values.extend(vec![Some("B"); 10]);
        let g = labeled(&values);
        let p = Partition::from_clusters(&g, &[(0..10).collect(), (10..20).collect()]).unwrap();
        let o = chi_squared_overlay(&g, &p, "kind").unwrap();
        let t = &o.clusters[0];
        assert!((t.statistic - 10.0).abs() < 1e-12);
        assert_eq!(t.df, 1);
        assert!((t.p_value - 0.001565).abs() < 1e-4);
        assert!((t.residuals["A"] - 2.2361).abs() < 1e-4);
        assert!((t.residuals["B"] + 2.2361).abs() < 1e-4);
    }

    #[test]
    fn degenerate_global_rejected() {
        let g = labeled(&[Some("A"), Some("A"), None]);
        let p = Partition::whole(&g).unwrap();
        assert!(matches!(
            chi_squared_overlay(&g, &p, "kind"),
            Err(StatsError::DegenerateGlobal { categories: 1, .. })
        ));
    }

    #[test]
    fn cluster_without_values_gets_unit_p() {
        let g = labeled(&[Some("A"), Some("B"), None, None]);
        let p = Partition::from_clusters(&g, &[vec![0, 1], vec![2, 3]]).unwrap();
        let o = chi_squared_overlay(&g, &p, "kind").unwrap();
        assert_eq!(o.clusters[1].n, 0);
        assert_eq!(o.clusters[1].p_value, 1.0);
        assert!(o.clusters[1].residuals.is_empty());
    }

    #[test]
    fn excluding_cluster_changes_expectation() {
        let g = labeled(&[
            Some("A"),
            Some("A"),
            Some("A"),
            Some("B"),
            Some("B"),
            Some("A"),
        ]);
        let p = Partition::from_clusters(&g, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let inc = chi_squared_overlay(&g, &p, "kind").unwrap();
        let exc =
            chi_squared_overlay_with(&g, &p, "kind", GlobalReference::ExcludeCluster).unwrap();
        assert!(exc.clusters[0].statistic > inc.clusters[0].statistic);
        assert!(inc.clusters[0].low_count);
    }

    #[test]
    fn auto_groups_follow_residual_signs() {
        let mut values = vec![Some("A"); 10];
        values.extend(vec![Some("B"); 10]);
        values.extend([Some("A"), Some("B")]);
        let g = labeled(&values);
        let p =
            Partition::from_clusters(&g, &[(0..10).collect(), (10..20).collect(), vec![20, 21]])
                .unwrap();
        let o = chi_squared_overlay(&g, &p, "kind").unwrap();
        let groups = auto_groups(&o, "A", 0.05).unwrap();
        assert_eq!(groups[&0], "over:A");
        assert_eq!(groups[&1], "under:A");
        assert_eq!(groups[&2], "typical");
        assert!(auto_groups(&o, "Z", 0.05).is_err());
    }
}
