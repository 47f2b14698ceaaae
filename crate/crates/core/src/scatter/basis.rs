use serde::{Deserialize, Serialize};

use crate::angular::Channel;
use crate::molsys::{level_energy, RigidRotorSpecies};

/// Channels of one `(J, parity)` block, ordered by internal energy, then
/// `j1, j2, j12, l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelBasis {
    pub total_j: u32,
    pub parity: i32,
    pub channels: Vec<Channel>,
}

impl ChannelBasis {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn open_indices(&self, e_total: f64) -> Vec<usize> {
        (0..self.channels.len())
            .filter(|&i| self.channels[i].internal_energy < e_total)
            .collect()
    }
}

/// Rotor-pair levels `(j1, j2)` with their internal energies, sorted like
/// the channels.
pub fn pair_levels(
    rotor: &RigidRotorSpecies,
    partner: &RigidRotorSpecies,
    j1max: u32,
    j2set: &[u32],
) -> Vec<((u32, u32), f64)> {
    let mut out: Vec<((u32, u32), f64)> = (0..=j1max)
        .flat_map(|j1| {
            j2set
                .iter()
                .map(move |&j2| ((j1, j2), level_energy(rotor, j1) + partner_energy(partner, j2)))
        })
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

fn partner_energy(partner: &RigidRotorSpecies, j2: u32) -> f64 {
    if j2 == 0 {
        0.0
    } else {
        level_energy(partner, j2)
    }
}

/// Enumerate every channel `(j1, j2, j12, l)` with `j1 <= j1max`, `j2` in
/// `j2set`, coupling to total `J` with the requested parity `(-1)^{j1+j2+l}`.
/// Open and closed channels are both included.
pub fn build_basis(
    rotor: &RigidRotorSpecies,
    partner: &RigidRotorSpecies,
    j1max: u32,
    j2set: &[u32],
    total_j: u32,
    parity: i32,
) -> ChannelBasis {
    let mut channels = Vec::new();
    let mut j2s: Vec<u32> = j2set.to_vec();
    j2s.sort_unstable();
    j2s.dedup();
    for j1 in 0..=j1max {
        for &j2 in &j2s {
            let eps = level_energy(rotor, j1) + partner_energy(partner, j2);
            for j12 in j1.abs_diff(j2)..=(j1 + j2) {
                for l in j12.abs_diff(total_j)..=(j12 + total_j) {
                    let p = if (j1 + j2 + l) % 2 == 0 { 1 } else { -1 };
                    if p == parity {
                        channels.push(Channel {
                            j1,
                            j2,
                            j12,
                            l,
                            internal_energy: eps,
                        });
                    }
                }
            }
        }
    }
    channels.sort_by(|a, b| {
        a.internal_energy
            .total_cmp(&b.internal_energy)
            .then(a.j1.cmp(&b.j1))
            .then(a.j2.cmp(&b.j2))
            .then(a.j12.cmp(&b.j12))
            .then(a.l.cmp(&b.l))
    });
    ChannelBasis {
        total_j,
        parity,
        channels,
    }
}
