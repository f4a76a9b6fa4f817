use crate::clustering::Partition;
use crate::graph::Network;
use crate::stats::{GeodesicTable, TestOverlay, YearlyTable};

fn write_rows(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("utf-8 input")
}

fn number(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

/// `node,cluster` for every scoped node, in id order.
pub fn partition_csv(net: &Network, p: &Partition) -> String {
    let header = vec!["node".to_string(), "cluster".to_string()];
    write_rows(
        std::iter::once(header).chain(
            p.scope()
                .iter()
                .zip(p.labels())
                .map(|(&n, &c)| vec![net.id(n).to_owned(), c.to_string()]),
        ),
    )
}

/// One row per cluster: test statistic, p-value and one residual column per
/// tested category.
pub fn overlay_csv(overlay: &TestOverlay) -> String {
    let categories = overlay.tested_categories();
    let mut header: Vec<String> = ["cluster", "n", "statistic", "df", "p_value", "low_count"]
        .map(String::from)
        .to_vec();
    header.extend(categories.iter().map(|c| format!("residual:{c}")));
    let rows = overlay.clusters.iter().map(|t| {
        let mut row = vec![
            t.cluster.to_string(),
            t.n.to_string(),
            t.statistic.to_string(),
            t.df.to_string(),
            t.p_value.to_string(),
            t.low_count.to_string(),
        ];
        row.extend(
            categories
                .iter()
                .map(|c| number(t.residuals.get(*c).copied())),
        );
        row
    });
    write_rows(std::iter::once(header).chain(rows))
}

/// Symmetric matrix of mean distances with labels on both axes; empty cells
/// where no connected pair exists.
pub fn geodesic_csv(table: &GeodesicTable) -> String {
    let mut header = vec![String::new()];
    header.extend(table.labels.iter().cloned());
    let rows = table.labels.iter().zip(&table.means).map(|(label, means)| {
        let mut row = vec![label.clone()];
        row.extend(means.iter().map(|m| number(*m)));
        row
    });
    write_rows(std::iter::once(header).chain(rows))
}

/// Per-year counts of every class plus the year total.
pub fn yearly_csv(table: &YearlyTable) -> String {
    let mut header = vec![table.year_attribute.clone()];
    header.extend(table.classes.iter().cloned());
    header.push("total".into());
    let rows = table.rows.iter().map(|r| {
        let mut row = vec![r.year.to_string()];
        row.extend(r.counts.iter().map(u64::to_string));
        row.push(r.total.to_string());
        row
    });
    write_rows(std::iter::once(header).chain(rows))
}

/// `component,size` for components listed largest first.
pub fn components_csv(sizes: &[usize]) -> String {
    let header = vec!["component".to_string(), "size".to_string()];
    write_rows(
        std::iter::once(header).chain(
            sizes
                .iter()
                .enumerate()
                .map(|(i, s)| vec![i.to_string(), s.to_string()]),
        ),
    )
}

/// `k,modularity` along a coarsening profile.
pub fn profile_csv(profile: &[(usize, f64)]) -> String {
    let header = vec!["k".to_string(), "modularity".to_string()];
    write_rows(
        std::iter::once(header).chain(
            profile
                .iter()
                .map(|(k, q)| vec![k.to_string(), q.to_string()]),
        ),
    )
}
