//! Domain model: autonomous systems host instances, instances host users,
//! users follow each other and author toots.
//!
//! An [`Ecosystem`] is immutable once built. It is assembled through an
//! [`EcosystemBuilder`], which canonicalises identifiers and rejects
//! dangling references, duplicates and self-follows as entities are added.
//! Entities must therefore be added host-first: ASes, then instances, then
//! users, then follows and toots.
//!
//! Entities are stored in insertion order; the position of an entity in its
//! slice is its index, and the index-based accessors (`user_instance`,
//! `instance_as`, ...) are what the analysis modules work with.

use std::collections::{HashMap, HashSet};

use crate::error::EcosystemError;

/// Trims surrounding whitespace and case-folds an identifier.
pub fn canonical_id(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Trims and upper-cases an ISO-3166 alpha-2 country code.
pub fn canonical_country(raw: &str) -> String {
    raw.trim().to_uppercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutonomousSystem {
    pub id: String,
    pub country: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub as_id: String,
    pub country: String,
    pub open_registration: bool,
    pub category: Option<String>,
}

impl Instance {
    /// An open-registration instance without a category.
    pub fn new(id: &str, as_id: &str, country: &str) -> Self {
        Self {
            id: id.to_string(),
            as_id: as_id.to_string(),
            country: country.to_string(),
            open_registration: true,
            category: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct User {
    pub id: String,
    pub instance_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toot {
    pub id: String,
    pub author_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub created_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ecosystem {
    ases: Vec<AutonomousSystem>,
    instances: Vec<Instance>,
    users: Vec<User>,
    toots: Vec<Toot>,
    follows: Vec<(u32, u32)>,
    instance_as: Vec<u32>,
    user_instance: Vec<u32>,
    toot_author: Vec<u32>,
    as_index: HashMap<String, u32>,
    instance_index: HashMap<String, u32>,
    user_index: HashMap<String, u32>,
    toot_index: HashMap<String, u32>,
}

impl Ecosystem {
    pub fn builder() -> EcosystemBuilder {
        EcosystemBuilder::default()
    }

    pub fn ases(&self) -> &[AutonomousSystem] {
        &self.ases
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn toots(&self) -> &[Toot] {
        &self.toots
    }

    /// Follow edges as (follower, followed) user indices.
    pub fn follows(&self) -> &[(u32, u32)] {
        &self.follows
    }

    pub fn user_instance(&self, user: usize) -> usize {
        self.user_instance[user] as usize
    }

    pub fn instance_as(&self, instance: usize) -> usize {
        self.instance_as[instance] as usize
    }

    pub fn toot_author(&self, toot: usize) -> usize {
        self.toot_author[toot] as usize
    }

    /// Home instance of a toot, i.e. the instance of its author.
    pub fn toot_home(&self, toot: usize) -> usize {
        self.user_instance(self.toot_author(toot))
    }

    pub fn as_idx(&self, id: &str) -> Option<usize> {
        self.as_index.get(&canonical_id(id)).map(|&i| i as usize)
    }

    pub fn instance_idx(&self, id: &str) -> Option<usize> {
        self.instance_index.get(&canonical_id(id)).map(|&i| i as usize)
    }

    pub fn user_idx(&self, id: &str) -> Option<usize> {
        self.user_index.get(&canonical_id(id)).map(|&i| i as usize)
    }

    pub fn toot_idx(&self, id: &str) -> Option<usize> {
        self.toot_index.get(&canonical_id(id)).map(|&i| i as usize)
    }

    pub fn users_per_instance(&self) -> Vec<usize> {
        let mut counts = vec![0; self.instances.len()];
        for &i in &self.user_instance {
            counts[i as usize] += 1;
        }
        counts
    }

    pub fn toots_per_instance(&self) -> Vec<usize> {
        let mut counts = vec![0; self.instances.len()];
        for t in 0..self.toots.len() {
            counts[self.toot_home(t)] += 1;
        }
        counts
    }

    pub fn toots_per_user(&self) -> Vec<usize> {
        let mut counts = vec![0; self.users.len()];
        for &a in &self.toot_author {
            counts[a as usize] += 1;
        }
        counts
    }

    pub fn instances_per_as(&self) -> Vec<usize> {
        let mut counts = vec![0; self.ases.len()];
        for &a in &self.instance_as {
            counts[a as usize] += 1;
        }
        counts
    }

    /// Instance indices grouped by hosting AS.
    pub fn instances_by_as(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.ases.len()];
        for (i, &a) in self.instance_as.iter().enumerate() {
            groups[a as usize].push(i);
        }
        groups
    }
}

/// Incrementally validating constructor for [`Ecosystem`].
#[derive(Debug, Default)]
pub struct EcosystemBuilder {
    eco: Ecosystem,
    follow_set: HashSet<(u32, u32)>,
}

fn checked_id(kind: &'static str, raw: &str) -> Result<String, EcosystemError> {
    let id = canonical_id(raw);
    if id.is_empty() {
        return Err(EcosystemError::EmptyId { kind });
    }
    Ok(id)
}

fn lookup(
    index: &HashMap<String, u32>,
    kind: &'static str,
    raw: &str,
) -> Result<u32, EcosystemError> {
    let id = canonical_id(raw);
    index
        .get(&id)
        .copied()
        .ok_or(EcosystemError::UnknownReference { kind, id })
}

fn claim(
    index: &mut HashMap<String, u32>,
    kind: &'static str,
    id: &str,
    next: usize,
) -> Result<(), EcosystemError> {
    if index.contains_key(id) {
        return Err(EcosystemError::DuplicateId {
            kind,
            id: id.to_string(),
        });
    }
    index.insert(id.to_string(), next as u32);
    Ok(())
}

impl EcosystemBuilder {
    pub fn add_as(&mut self, id: &str, country: &str) -> Result<usize, EcosystemError> {
        let id = checked_id("AS", id)?;
        let idx = self.eco.ases.len();
        claim(&mut self.eco.as_index, "AS", &id, idx)?;
        self.eco.ases.push(AutonomousSystem {
            id,
            country: canonical_country(country),
        });
        Ok(idx)
    }

    pub fn add_instance(&mut self, instance: Instance) -> Result<usize, EcosystemError> {
        let id = checked_id("instance", &instance.id)?;
        let as_idx = lookup(&self.eco.as_index, "AS", &instance.as_id)?;
        let idx = self.eco.instances.len();
        claim(&mut self.eco.instance_index, "instance", &id, idx)?;
        self.eco.instances.push(Instance {
            id,
            as_id: self.eco.ases[as_idx as usize].id.clone(),
            country: canonical_country(&instance.country),
            open_registration: instance.open_registration,
            category: instance
                .category
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty()),
        });
        self.eco.instance_as.push(as_idx);
        Ok(idx)
    }

    pub fn add_user(&mut self, id: &str, instance_id: &str) -> Result<usize, EcosystemError> {
        let id = checked_id("user", id)?;
        let inst = lookup(&self.eco.instance_index, "instance", instance_id)?;
        let idx = self.eco.users.len();
        claim(&mut self.eco.user_index, "user", &id, idx)?;
        self.eco.users.push(User {
            id,
            instance_id: self.eco.instances[inst as usize].id.clone(),
        });
        self.eco.user_instance.push(inst);
        Ok(idx)
    }

    pub fn add_follow(&mut self, follower: &str, followed: &str) -> Result<(), EcosystemError> {
        let a = lookup(&self.eco.user_index, "user", follower)?;
        let b = lookup(&self.eco.user_index, "user", followed)?;
        self.add_follow_idx(a as usize, b as usize)
    }

    /// Adds a follow edge by user index. Indices must come from `add_user`.
    pub fn add_follow_idx(&mut self, follower: usize, followed: usize) -> Result<(), EcosystemError> {
        let n = self.eco.users.len();
        for u in [follower, followed] {
            if u >= n {
                return Err(EcosystemError::UnknownReference {
                    kind: "user",
                    id: format!("#{u}"),
                });
            }
        }
        if follower == followed {
            return Err(EcosystemError::SelfFollow(self.eco.users[follower].id.clone()));
        }
        let edge = (follower as u32, followed as u32);
        if !self.follow_set.insert(edge) {
            return Err(EcosystemError::DuplicateFollow {
                follower: self.eco.users[follower].id.clone(),
                followed: self.eco.users[followed].id.clone(),
            });
        }
        self.eco.follows.push(edge);
        Ok(())
    }

    pub fn has_follow_idx(&self, follower: usize, followed: usize) -> bool {
        self.follow_set.contains(&(follower as u32, followed as u32))
    }

    pub fn add_toot(&mut self, id: &str, author_id: &str, created_at: i64) -> Result<usize, EcosystemError> {
        let id = checked_id("toot", id)?;
        let author = lookup(&self.eco.user_index, "user", author_id)?;
        let idx = self.eco.toots.len();
        claim(&mut self.eco.toot_index, "toot", &id, idx)?;
        self.eco.toots.push(Toot {
            id,
            author_id: self.eco.users[author as usize].id.clone(),
            created_at,
        });
        self.eco.toot_author.push(author);
        Ok(idx)
    }

    pub fn user_count(&self) -> usize {
        self.eco.users.len()
    }

    /// The ecosystem assembled so far.
    pub(crate) fn build_ref(&self) -> &Ecosystem {
        &self.eco
    }

    pub fn build(self) -> Ecosystem {
        self.eco
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_canonicalised_and_resolved() {
        let mut b = Ecosystem::builder();
        b.add_as(" AS1 ", "jp").unwrap();
        b.add_instance(Instance::new("Mstdn.JP", "as1", "jp")).unwrap();
        b.add_user("Alice@Mstdn.jp ", "mstdn.jp").unwrap();
        let eco = b.build();
        assert_eq!(eco.ases()[0].id, "as1");
        assert_eq!(eco.ases()[0].country, "JP");
        assert_eq!(eco.instances()[0].id, "mstdn.jp");
        assert_eq!(eco.users()[0].id, "alice@mstdn.jp");
        assert_eq!(eco.user_idx("ALICE@mstdn.jp"), Some(0));
    }

    #[test]
    fn duplicates_after_canonicalisation_are_rejected() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        let err = b.add_as(" A", "US").unwrap_err();
        assert_eq!(
            err,
            EcosystemError::DuplicateId {
                kind: "AS",
                id: "a".into()
            }
        );
    }

    #[test]
    fn dangling_references_are_rejected() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        assert!(matches!(
            b.add_instance(Instance::new("i", "b", "US")),
            Err(EcosystemError::UnknownReference { kind: "AS", .. })
        ));
        b.add_instance(Instance::new("i", "a", "US")).unwrap();
        assert!(matches!(
            b.add_user("u", "j"),
            Err(EcosystemError::UnknownReference { kind: "instance", .. })
        ));
        b.add_user("u", "i").unwrap();
        assert!(matches!(
            b.add_toot("t", "v", 0),
            Err(EcosystemError::UnknownReference { kind: "user", .. })
        ));
        assert!(b.add_follow("u", "v").is_err());
    }

    #[test]
    fn self_and_duplicate_follows_are_rejected() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        b.add_instance(Instance::new("i", "a", "US")).unwrap();
        b.add_user("u", "i").unwrap();
        b.add_user("v", "i").unwrap();
        assert_eq!(b.add_follow("u", "u"), Err(EcosystemError::SelfFollow("u".into())));
        b.add_follow("u", "v").unwrap();
        assert!(matches!(
            b.add_follow("U", "v"),
            Err(EcosystemError::DuplicateFollow { .. })
        ));
        b.add_follow("v", "u").unwrap();
        assert_eq!(b.build().follows().len(), 2);
    }

    #[test]
    fn empty_ids_are_rejected() {
        let mut b = Ecosystem::builder();
        assert_eq!(b.add_as("  ", "US"), Err(EcosystemError::EmptyId { kind: "AS" }));
    }
}
