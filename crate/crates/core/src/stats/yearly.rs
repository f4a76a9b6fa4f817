use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{require_kind, StatsError};
use crate::clustering::{ClusterId, Partition};
use crate::graph::{AttrKind, AttrValue, Network, NodeIdx};

/// Where each node's class comes from.
#[derive(Debug, Clone, Copy)]
pub enum ClassSource<'a> {
    Attribute(&'a str),
    Groups {
        partition: &'a Partition,
        labels: &'a BTreeMap<ClusterId, String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearRow {
    pub year: i64,
    pub counts: Vec<u64>,
    /// Within-year shares, aligned with the table's classes.
    pub shares: Vec<f64>,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyTable {
    pub year_attribute: String,
    pub classes: Vec<String>,
    pub rows: Vec<YearRow>,
}

/// Per-year class counts over `scope`. Nodes lacking a year or a class are
/// skipped, and years with no counted node are omitted.
pub fn yearly_distribution(
    net: &Network,
    scope: &[NodeIdx],
    year_attribute: &str,
    source: ClassSource<'_>,
    years: Option<RangeInclusive<i64>>,
) -> Result<YearlyTable, StatsError> {
    require_kind(net, year_attribute, AttrKind::Integer)?;
    let class_of: Box<dyn Fn(NodeIdx) -> Option<String>> = match source {
        ClassSource::Attribute(name) => {
            require_kind(net, name, AttrKind::Categorical)?;
            Box::new(move |n| {
                net.attribute(n, name)
                    .and_then(AttrValue::as_category)
                    .map(str::to_owned)
            })
        }
        ClassSource::Groups { partition, labels } => {
            if let Some(c) = (0..partition.k()).find(|c| !labels.contains_key(c)) {
                return Err(StatsError::UnlabeledCluster(c));
            }
            Box::new(move |n| partition.cluster_of(n).map(|c| labels[&c].clone()))
        }
    };

    let mut tallies: BTreeMap<i64, BTreeMap<String, u64>> = BTreeMap::new();
    let mut classes = BTreeSet::new();
    for &n in scope {
        let Some(year) = net
            .attribute(n, year_attribute)
            .and_then(AttrValue::as_integer)
        else {
            continue;
        };
        if years.as_ref().is_some_and(|r| !r.contains(&year)) {
            continue;
        }
        let Some(class) = class_of(n) else { continue };
        classes.insert(class.clone());
        *tallies.entry(year).or_default().entry(class).or_default() += 1;
    }
    if let ClassSource::Groups { labels, .. } = source {
        classes.extend(labels.values().cloned());
    }
    let classes: Vec<String> = classes.into_iter().collect();
    let rows = tallies
        .into_iter()
        .map(|(year, counts)| {
            let counts: Vec<u64> = classes
                .iter()
                .map(|c| counts.get(c).copied().unwrap_or(0))
                .collect();
            let total: u64 = counts.iter().sum();
            YearRow {
                year,
                shares: counts.iter().map(|&c| c as f64 / total as f64).collect(),
                counts,
                total,
            }
        })
        .collect();
    Ok(YearlyTable {
        year_attribute: year_attribute.to_owned(),
        classes,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeRecord, Schema};

    fn dated(records: &[(i64, &str)]) -> Network {
        let schema: Schema = [
            ("year".to_string(), AttrKind::Integer),
            ("kind".to_string(), AttrKind::Categorical),
        ]
        .into();
        let nodes = records
            .iter()
            .enumerate()
            .map(|(i, &(y, k))| {
                NodeRecord::new(format!("n{i}"))
                    .with("year", AttrValue::Integer(y))
                    .with("kind", AttrValue::Categorical(k.into()))
            })
            .collect();
        Network::build(schema, nodes, []).unwrap()
    }

    #[test]
    fn shares_per_year() {
        let g = dated(&[(1990, "A"), (1990, "B"), (1991, "A")]);
        let t = yearly_distribution(&g, &[0, 1, 2], "year", ClassSource::Attribute("kind"), None)
            .unwrap();
        assert_eq!(t.classes, vec!["A", "B"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].shares, vec![0.5, 0.5]);
        assert_eq!(t.rows[1].year, 1991);
        assert_eq!(t.rows[1].shares, vec![1.0, 0.0]);
    }

    #[test]
    fn empty_scope_and_year_filter() {
        let g = dated(&[(1990, "A"), (1991, "B")]);
        let t = yearly_distribution(&g, &[], "year", ClassSource::Attribute("kind"), None).unwrap();
        assert!(t.rows.is_empty());
        let t = yearly_distribution(
            &g,
            &[0, 1],
            "year",
            ClassSource::Attribute("kind"),
            Some(1990..=1990),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].year, 1990);
    }

    #[test]
    fn year_attribute_must_be_integer() {
        let g = dated(&[(1990, "A")]);
        assert_eq!(
            yearly_distribution(&g, &[0], "kind", ClassSource::Attribute("kind"), None),
            Err(StatsError::NotIntegerAttribute("kind".into()))
        );
        assert_eq!(
            yearly_distribution(&g, &[0], "when", ClassSource::Attribute("kind"), None),
            Err(StatsError::UnknownAttribute("when".into()))
        );
    }
}
