//! Hand-built ecosystems shared by unit tests.

use crate::{Ecosystem, Instance};

/// `u1@i1 -> u2@i2 -> u3@i3`, one toot per user (`t1`, `t2`, `t3`),
/// instances `i1`, `i2` in AS `a1` (JP) and `i3` in AS `a2` (US).
pub fn three_instance_chain() -> Ecosystem {
    let mut b = Ecosystem::builder();
    b.add_as("a1", "JP").unwrap();
    b.add_as("a2", "US").unwrap();
    b.add_instance(Instance::new("i1", "a1", "JP")).unwrap();
    b.add_instance(Instance::new("i2", "a1", "JP")).unwrap();
    b.add_instance(Instance::new("i3", "a2", "US")).unwrap();
    b.add_user("u1", "i1").unwrap();
    b.add_user("u2", "i2").unwrap();
    b.add_user("u3", "i3").unwrap();
    b.add_follow("u1", "u2").unwrap();
    b.add_follow("u2", "u3").unwrap();
    b.add_toot("t1", "u1", 0).unwrap();
    b.add_toot("t2", "u2", 0).unwrap();
    b.add_toot("t3", "u3", 0).unwrap();
    b.build()
}

/// Same topology as [`three_instance_chain`] but with 3, 2 and 1 users on
/// `i1`, `i2`, `i3`. Extra users have no follows and no toots.
pub fn sized_chain() -> Ecosystem {
    let mut b = Ecosystem::builder();
    b.add_as("a1", "JP").unwrap();
    b.add_as("a2", "US").unwrap();
    b.add_instance(Instance::new("i1", "a1", "JP")).unwrap();
    b.add_instance(Instance::new("i2", "a1", "JP")).unwrap();
    b.add_instance(Instance::new("i3", "a2", "US")).unwrap();
    for (u, i) in [
        ("u1", "i1"),
        ("u2", "i2"),
        ("u3", "i3"),
        ("u4", "i1"),
        ("u5", "i1"),
        ("u6", "i2"),
    ] {
        b.add_user(u, i).unwrap();
    }
    b.add_follow("u1", "u2").unwrap();
    b.add_follow("u2", "u3").unwrap();
    b.add_toot("t1", "u1", 0).unwrap();
    b.add_toot("t2", "u2", 0).unwrap();
    b.add_toot("t3", "u3", 0).unwrap();
    b.build()
}
