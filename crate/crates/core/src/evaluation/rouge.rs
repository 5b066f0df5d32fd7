//! ROUGE-L F1: longest-common-subsequence precision/recall over whitespace
//! tokens, max over references.

fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    let mut dp = vec![0usize; b.len() + 1];
    for &ai in a {
        let mut prev = 0;
        for (j, &bj) in b.iter().enumerate() {
            let cur = dp[j + 1];
            dp[j + 1] = if ai == bj {
                prev + 1
            } else {
                dp[j + 1].max(dp[j])
            };
            prev = cur;
        }
    }
    dp[b.len()]
}

pub fn rouge_l_f1_single(hyp: &str, reference: &str) -> f64 {
    let h: Vec<&str> = hyp.split_whitespace().collect();
    let r: Vec<&str> = reference.split_whitespace().collect();
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }
    let l = lcs_len(&h, &r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let p = l / h.len() as f64;
    let rec = l / r.len() as f64;
    2.0 * p * rec / (p + rec)
}

/// Maximum ROUGE-L F1 over the reference set.
pub fn rouge_l_f1(hyp: &str, refs: &[String]) -> Option<f64> {
    if refs.is_empty() {
        return None;
    }
    refs.iter()
        .map(|r| rouge_l_f1_single(hyp, r))
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_is_one() {
        assert_eq!(rouge_l_f1_single("a b c d", "a b c d"), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(rouge_l_f1_single("a b c", "x y z"), 0.0);
    }

    #[test]
    fn hand_lcs_oracle() {
        // hyp "a b c" vs ref "a x c": LCS = 2, P = R = 2/3, F1 = 2/3.
        let f1 = rouge_l_f1_single("a b c", "a x c");
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_over_refs_order_invariant() {
        let refs1 = vec!["a b c".to_string(), "x y".to_string()];
        let refs2 = vec!["x y".to_string(), "a b c".to_string()];
        assert_eq!(
            rouge_l_f1("a b", &refs1).unwrap(),
            rouge_l_f1("a b", &refs2).unwrap()
        );
    }

    /// Exponential brute force: longest subsequence of `a` that is also a
    /// subsequence of `b`.
    fn brute_lcs(a: &[&str], b: &[&str]) -> usize {
        fn is_subseq(needle: &[&str], hay: &[&str]) -> bool {
            let mut it = hay.iter();
            needle.iter().all(|n| it.any(|h| h == n))
        }
        let mut best = 0;
        for mask in 0..(1u32 << a.len()) {
            let sub: Vec<&str> = a
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &w)| w)
                .collect();
            if sub.len() > best && is_subseq(&sub, b) {
                best = sub.len();
            }
        }
        best
    }

    proptest! {
        #[test]
        fn dp_matches_exhaustive_lcs(
            a in proptest::collection::vec("[ab c]{1}", 1..10),
            b in proptest::collection::vec("[abc]{1}", 1..10),
        ) {
            let av: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
            let bv: Vec<&str> = b.iter().map(|s| s.as_str()).collect();
            prop_assert_eq!(lcs_len(&av, &bv), brute_lcs(&av, &bv));
        }

        #[test]
        fn f1_in_unit_interval(h in "[a-c ]{0,20}", r in "[a-c ]{0,20}") {
            let f1 = rouge_l_f1_single(&h, &r);
            prop_assert!((0.0..=1.0).contains(&f1));
        }
    }
}
