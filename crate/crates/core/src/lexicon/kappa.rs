//! Cohen's kappa, unweighted and with linear disagreement weights.
//!
//! All sums are accumulated over integer cell counts and divided once at the end.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Judgment, PolarityLabel};

#[derive(Debug, Error, PartialEq)]
pub enum KappaError {
    #[error("no annotation pairs to compare")]
    EmptyInput,
    #[error("chance agreement is 1 but observed agreement is below 1")]
    DegenerateMarginals,
    #[error("category index {index} out of range for {categories} categories")]
    CategoryOutOfRange { index: usize, categories: usize },
    #[error("judgment `{0}` is not part of the declared category order")]
    UnknownCategory(Judgment),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Disagreement weight `|i - j|` over the declared category order.
    Linear,
}

impl std::str::FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unweighted" | "none" => Ok(Weighting::Unweighted),
            "linear" => Ok(Weighting::Linear),
            other => Err(format!(
                "unknown weighting `{other}` (expected unweighted or linear)"
            )),
        }
    }
}

/// Square table of pair counts: `counts[i][j]` is the number of items the first
/// annotator put in category `i` and the second in category `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn from_pairs(pairs: &[(usize, usize)], categories: usize) -> Result<Self, KappaError> {
        let mut counts = vec![vec![0u64; categories]; categories];
        for &(a, b) in pairs {
            for index in [a, b] {
                if index >= categories {
                    return Err(KappaError::CategoryOutOfRange { index, categories });
                }
            }
            counts[a][b] += 1;
        }
        Ok(Self { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_totals(&self) -> Vec<u64> {
        let k = self.counts.len();
        (0..k)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn kappa(&self, weighting: Weighting) -> Result<f64, KappaError> {
        let n = self.total() as u128;
        if n == 0 {
            return Err(KappaError::EmptyInput);
        }
        let rows = self.row_totals();
        let cols = self.column_totals();
        let weight = |i: usize, j: usize| -> u128 {
            match weighting {
                Weighting::Unweighted => u128::from(i != j),
                Weighting::Linear => i.abs_diff(j) as u128,
            }
        };
        // kappa = 1 - (sum w*o) / (sum w*e), scaled by n^2 on both sides:
        // observed n * sum w_ij O_ij, expected sum w_ij R_i C_j.
        let mut observed = 0u128;
        let mut expected = 0u128;
        for (i, (row, &r)) in self.counts.iter().zip(&rows).enumerate() {
            for (j, (&o, &c)) in row.iter().zip(&cols).enumerate() {
                let w = weight(i, j);
                if w == 0 {
                    continue;
                }
                observed += w * o as u128 * n;
                expected += w * r as u128 * c as u128;
            }
        }
        if expected == 0 {
            return if observed == 0 {
                Ok(1.0)
            } else {
                Err(KappaError::DegenerateMarginals)
            };
        }
        Ok((expected as f64 - observed as f64) / expected as f64)
    }
}

/// Kappa over category indices `0..categories`.
pub fn kappa_from_indices(
    pairs: &[(usize, usize)],
    categories: usize,
    weighting: Weighting,
) -> Result<f64, KappaError> {
    if pairs.is_empty() {
        return Err(KappaError::EmptyInput);
    }
    ContingencyTable::from_pairs(pairs, categories)?.kappa(weighting)
}

/// Ordering of judgment categories used for table layout and linear weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryOrder(pub Vec<Judgment>);

impl Default for CategoryOrder {
    /// Negative < Ambiguous < Uncertain < Neutral < Positive.
    fn default() -> Self {
        Self(vec![
            Judgment::Label(PolarityLabel::Negative),
            Judgment::Label(PolarityLabel::Ambiguous),
            Judgment::Uncertain,
            Judgment::Label(PolarityLabel::Neutral),
            Judgment::Label(PolarityLabel::Positive),
        ])
    }
}

impl CategoryOrder {
    pub fn index_of(&self, j: Judgment) -> Option<usize> {
        self.0.iter().position(|&c| c == j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaOptions {
    pub weighting: Weighting,
    /// When false, pairs where either judgment is Uncertain are dropped.
    pub include_borderline: bool,
    pub order: CategoryOrder,
}

impl Default for KappaOptions {
    fn default() -> Self {
        Self {
            weighting: Weighting::Unweighted,
            include_borderline: true,
            order: CategoryOrder::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa: f64,
    pub weighting: Weighting,
    pub include_borderline: bool,
    pub categories: Vec<Judgment>,
    pub table: ContingencyTable,
    /// Pairs that entered the computation.
    pub items: usize,
    /// Borderline pairs left out because `include_borderline` was false.
    pub excluded: usize,
}

/// Cohen's kappa between two annotators' judgments.
///
/// Uncertain counts as a category of its own unless borderline pairs are excluded.
pub fn cohen_kappa(
    pairs: &[(Judgment, Judgment)],
    options: &KappaOptions,
) -> Result<KappaReport, KappaError> {
    let mut indexed = Vec::with_capacity(pairs.len());
    let mut excluded = 0;
    for &(a, b) in pairs {
        if !options.include_borderline && (a == Judgment::Uncertain || b == Judgment::Uncertain) {
            excluded += 1;
            continue;
        }
        let ia = options
            .order
            .index_of(a)
            .ok_or(KappaError::UnknownCategory(a))?;
        let ib = options
            .order
            .index_of(b)
            .ok_or(KappaError::UnknownCategory(b))?;
        indexed.push((ia, ib));
    }
    if indexed.is_empty() {
        return Err(KappaError::EmptyInput);
    }
    let table = ContingencyTable::from_pairs(&indexed, options.order.0.len())?;
    let kappa = table.kappa(options.weighting)?;
    Ok(KappaReport {
        kappa,
        weighting: options.weighting,
        include_borderline: options.include_borderline,
        categories: options.order.0.clone(),
        table,
        items: indexed.len(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use PolarityLabel::*;

    const P: Judgment = Judgment::Label(Positive);
    const N: Judgment = Judgment::Label(Negative);
    const U: Judgment = Judgment::Uncertain;

    fn zip(a: &[Judgment], b: &[Judgment]) -> Vec<(Judgment, Judgment)> {
        a.iter().copied().zip(b.iter().copied()).collect()
    }

    fn unweighted(a: &[Judgment], b: &[Judgment]) -> f64 {
        cohen_kappa(&zip(a, b), &KappaOptions::default())
            .unwrap()
            .kappa
    }

    // Item-pair oracle: chance agreement as the mean over all (i, j) item pairs.
    fn oracle(pairs: &[(usize, usize)], weighting: Weighting) -> f64 {
        let w = |a: usize, b: usize| match weighting {
            Weighting::Unweighted => (a != b) as u8 as f64,
            Weighting::Linear => a.abs_diff(b) as f64,
        };
        let n = pairs.len() as f64;
        let obs: f64 = pairs.iter().map(|&(a, b)| w(a, b)).sum::<f64>() / n;
        let mut exp = 0.0;
        for &(a, _) in pairs {
            for &(_, b) in pairs {
                exp += w(a, b);
            }
        }
        exp /= n * n;
        if exp == 0.0 {
            1.0
        } else {
            1.0 - obs / exp
        }
    }

    #[test]
    fn identical_sequences_give_one() {
        assert_eq!(unweighted(&[P, N, P, U], &[P, N, P, U]), 1.0);
        assert_eq!(unweighted(&[P, P], &[P, P]), 1.0);
        let opts = KappaOptions {
            weighting: Weighting::Linear,
            ..Default::default()
        };
        assert_eq!(
            cohen_kappa(&zip(&[P, N], &[P, N]), &opts).unwrap().kappa,
            1.0
        );
    }

    #[test]
    fn chance_level_fixture() {
        // p_o = 0.5, p_e = 0.5
        let k = unweighted(&[P, P, N, N], &[P, P, P, P]);
        assert!(k.abs() <= 1e-12, "{k}");
    }

    #[test]
    fn five_pair_fixture() {
        // p_o = 0.8, p_e = 0.6*0.4 + 0.4*0.6 = 0.48, kappa = 0.32/0.52
        let k = unweighted(&[P, N, P, N, P], &[P, N, P, N, N]);
        assert!((k - 0.6154).abs() < 1e-4, "{k}");
        assert!((k - 0.32 / 0.52).abs() < 1e-12);
    }

    #[test]
    fn borderline_exclusion_changes_value() {
        let a = [P, N, U, P, N];
        let b = [P, N, P, P, P];
        let with = cohen_kappa(&zip(&a, &b), &KappaOptions::default()).unwrap();
        let without = cohen_kappa(
            &zip(&a, &b),
            &KappaOptions {
                include_borderline: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with.items, 5);
        assert_eq!(without.items, 4);
        assert_eq!(without.excluded, 1);
        assert_ne!(with.kappa, without.kappa);
    }

    #[test]
    fn errors() {
        assert_eq!(
            cohen_kappa(&[], &KappaOptions::default()).unwrap_err(),
            KappaError::EmptyInput
        );
        let only_uncertain = zip(&[U], &[P]);
        let opts = KappaOptions {
            include_borderline: false,
            ..Default::default()
        };
        assert_eq!(
            cohen_kappa(&only_uncertain, &opts).unwrap_err(),
            KappaError::EmptyInput
        );
        let narrow = KappaOptions {
            order: CategoryOrder(vec![P, N]),
            ..Default::default()
        };
        assert_eq!(
            cohen_kappa(&zip(&[U], &[P]), &narrow).unwrap_err(),
            KappaError::UnknownCategory(U)
        );
        assert!(matches!(
            kappa_from_indices(&[(0, 3)], 2, Weighting::Unweighted),
            Err(KappaError::CategoryOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn table_layout() {
        let r = cohen_kappa(&zip(&[P, N], &[N, N]), &KappaOptions::default()).unwrap();
        // default order: neg, amb, uncertain, neu, pos
        assert_eq!(r.table.counts[0][0], 1);
        assert_eq!(r.table.counts[4][0], 1);
        assert_eq!(r.table.total(), 2);
    }

    fn pairs_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..=5).prop_flat_map(|k| (Just(k), prop::collection::vec((0..k, 0..k), 1..60)))
    }

    proptest! {
        #[test]
        fn matches_item_pair_oracle((k, pairs) in pairs_strategy()) {
            for weighting in [Weighting::Unweighted, Weighting::Linear] {
                let got = kappa_from_indices(&pairs, k, weighting).unwrap();
                prop_assert!((got - oracle(&pairs, weighting)).abs() < 1e-9);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&got));
            }
        }

        #[test]
        fn invariant_under_relabeling((k, pairs) in pairs_strategy(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let relabeled: Vec<_> = pairs.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            let a = kappa_from_indices(&pairs, k, Weighting::Unweighted).unwrap();
            let b = kappa_from_indices(&relabeled, k, Weighting::Unweighted).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn one_iff_full_agreement((k, pairs) in pairs_strategy()) {
            let observed: std::collections::BTreeSet<usize> =
                pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            prop_assume!(observed.len() >= 2);
            let agree = pairs.iter().all(|&(a, b)| a == b);
            let kappa = kappa_from_indices(&pairs, k, Weighting::Unweighted).unwrap();
            prop_assert_eq!(kappa == 1.0, agree);
        }

        #[test]
        fn two_categories_weighting_agrees(
            pairs in prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 1..60),
            lo in 0usize..5, gap in 1usize..4,
        ) {
            let hi = lo + gap;
            let mapped: Vec<_> = pairs
                .iter()
                .map(|&(a, b)| (if a { hi } else { lo }, if b { hi } else { lo }))
                .collect();
            let u = kappa_from_indices(&mapped, hi + 1, Weighting::Unweighted);
            let l = kappa_from_indices(&mapped, hi + 1, Weighting::Linear);
            match (u, l) {
                (Ok(u), Ok(l)) => prop_assert!((u - l).abs() < 1e-12),
                (u, l) => prop_assert_eq!(u, l),
            }
        }
    }
}
