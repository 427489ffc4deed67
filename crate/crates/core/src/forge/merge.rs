use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw label -> canonical label. Idempotent and total over the vocabulary
/// it was built from; labels outside it pass through unchanged.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LabelMap {
    map: BTreeMap<String, String>,
}

impl LabelMap {
    pub fn apply<'a>(&'a self, label: &'a str) -> &'a str {
        self.map.get(label).map(String::as_str).unwrap_or(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Rewrite object and interaction labels in place; objects whose
    /// labels collapse onto the same canonical form merge by summing
    /// counts (first occurrence keeps its attributes).
    pub fn apply_to_annotations(&self, annotations: &mut [crate::annotation::ImageAnnotation]) {
        for a in annotations {
            let mut seen: BTreeMap<String, usize> = BTreeMap::new();
            let mut merged = Vec::with_capacity(a.objects.len());
            for mut obj in a.objects.drain(..) {
                obj.label = self.apply(&obj.label).to_string();
                match seen.get(&obj.label) {
                    Some(&i) => {
                        let slot: &mut crate::annotation::ObjectEntry = &mut merged[i];
                        slot.count += obj.count;
                    }
                    None => {
                        seen.insert(obj.label.clone(), merged.len());
                        merged.push(obj);
                    }
                }
            }
            a.objects = merged;
            for p in &mut a.persons {
                if let Some(i) = &mut p.interaction {
                    i.object_label = self.apply(&i.object_label).to_string();
                }
            }
        }
    }
}

/// Group labels by single-linkage over pairs with cosine >= threshold and
/// map every member to the group's canonical label: the highest-frequency
/// member, ties broken lexicographically.
pub fn merge_labels(
    vocab: &BTreeMap<String, usize>,
    embeddings: &BTreeMap<String, Vec<f64>>,
    threshold: f64,
) -> Result<LabelMap> {
    let labels: Vec<&String> = vocab.keys().collect();
    for label in &labels {
        if !embeddings.contains_key(*label) {
            return Err(Error::Data(format!("missing embedding for label {label:?}")));
        }
    }

    // union-find over label indices
    let mut parent: Vec<usize> = (0..labels.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let cos = dot(&embeddings[labels[i]], &embeddings[labels[j]]);
            if cos >= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..labels.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut map = BTreeMap::new();
    for members in groups.values() {
        let canonical = members
            .iter()
            .map(|&i| labels[i])
            .max_by(|a, b| {
                vocab[*a]
                    .cmp(&vocab[*b])
                    .then_with(|| b.cmp(a)) // ties: lexicographically smallest wins
            })
            .expect("group nonempty");
        for &i in members {
            map.insert(labels[i].clone(), canonical.clone());
        }
    }
    Ok(LabelMap { map })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(entries: &[(&str, usize)]) -> BTreeMap<String, usize> {
        entries.iter().map(|(l, f)| ((*l).to_string(), *f)).collect()
    }

    fn embeds(entries: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
        entries
            .iter()
            .map(|(l, v)| ((*l).to_string(), v.to_vec()))
            .collect()
    }

    #[test]
    fn distinct_vectors_at_threshold_one_give_identity() {
        let v = vocab(&[("cat", 3), ("dog", 5)]);
        let e = embeds(&[("cat", &[1.0, 0.0]), ("dog", &[0.0, 1.0])]);
        let map = merge_labels(&v, &e, 1.0).unwrap();
        assert_eq!(map.apply("cat"), "cat");
        assert_eq!(map.apply("dog"), "dog");
    }

    #[test]
    fn similar_labels_map_to_most_frequent() {
        // laptop/notebook/computer pairwise similar; computer most frequent
        let v = vocab(&[("laptop", 4), ("notebook", 2), ("computer", 9)]);
        let e = embeds(&[
            ("laptop", &[1.0, 0.0]),
            ("notebook", &[0.999, 0.0447]),
            ("computer", &[0.995, 0.0999]),
        ]);
        let map = merge_labels(&v, &e, 0.99).unwrap();
        assert_eq!(map.apply("laptop"), "computer");
        assert_eq!(map.apply("notebook"), "computer");
        assert_eq!(map.apply("computer"), "computer");
    }

    #[test]
    fn single_linkage_chains_transitively() {
        // a~b and b~c but a and c dissimilar; all three still one group
        let v = vocab(&[("a", 1), ("b", 1), ("c", 1)]);
        let e = embeds(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.9397, 0.3420]), // ~20 deg from a, ~20 deg from c
            ("c", &[0.7660, 0.6428]), // ~40 deg from a
        ]);
        let threshold = 0.93;
        assert!(dot(&e["a"], &e["b"]) >= threshold);
        assert!(dot(&e["b"], &e["c"]) >= threshold);
        assert!(dot(&e["a"], &e["c"]) < threshold);
        let map = merge_labels(&v, &e, threshold).unwrap();
        // frequency ties, lexicographically smallest canonical
        assert_eq!(map.apply("a"), "a");
        assert_eq!(map.apply("b"), "a");
        assert_eq!(map.apply("c"), "a");
    }

    #[test]
    fn map_is_idempotent() {
        let v = vocab(&[("laptop", 4), ("computer", 9)]);
        let e = embeds(&[("laptop", &[1.0, 0.0]), ("computer", &[0.999, 0.0447])]);
        let map = merge_labels(&v, &e, 0.99).unwrap();
        for (raw, _) in map.iter() {
            let once = map.apply(raw);
            assert_eq!(map.apply(once), once);
        }
    }

    #[test]
    fn missing_embedding_is_an_error() {
        let v = vocab(&[("cat", 1)]);
        let e = embeds(&[]);
        assert!(merge_labels(&v, &e, 0.9).is_err());
    }
}
