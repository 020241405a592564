//! Switch signs for the alternating upwind/downwind viscous fluxes.
//!
//! Every element direction carries a sign `S+` at its `ξ = 1` end and
//! `S- = -S+` at its `ξ = 0` end. The two elements sharing an interior face
//! must carry opposite signs on it.

use crate::mesh::quad::QuadMesh;

/// Direction (0 for `ξ1`, 1 for `ξ2`) crossed by a local face.
pub fn face_dir(local: usize) -> usize {
    if local % 2 == 1 {
        0
    } else {
        1
    }
}

/// True for faces at the `ξ = 1` end of their direction.
pub fn face_is_plus(local: usize) -> bool {
    local == 1 || local == 2
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchAssignment {
    /// `S+` per element and direction.
    pub plus: Vec<[i8; 2]>,
}

impl SwitchAssignment {
    /// Sign carried by element `elem` on its local face `local`.
    pub fn sign(&self, elem: usize, local: usize) -> i8 {
        let s = self.plus[elem][face_dir(local)];
        if face_is_plus(local) {
            s
        } else {
            -s
        }
    }

    /// Interior faces whose two sides carry equal signs.
    pub fn violations(&self, mesh: &QuadMesh) -> Vec<usize> {
        mesh.faces
            .iter()
            .enumerate()
            .filter_map(|(id, f)| {
                let r = f.right?;
                (self.sign(f.left.elem, f.left.local) == self.sign(r.elem, r.local)).then_some(id)
            })
            .collect()
    }
}

/// Walks element lines starting from interior faces in ascending index order;
/// the left side of the first face of each new line gets `+1`.
pub fn assign_switches(mesh: &QuadMesh) -> SwitchAssignment {
    let ne = mesh.n_elems();
    let mut plus = vec![[0i8; 2]; ne];
    let set = |plus: &mut Vec<[i8; 2]>, elem: usize, local: usize, sign: i8| -> bool {
        let d = face_dir(local);
        if plus[elem][d] != 0 {
            return false;
        }
        plus[elem][d] = if face_is_plus(local) { sign } else { -sign };
        true
    };
    for face in &mesh.faces {
        let Some(right) = face.right else { continue };
        if plus[face.left.elem][face_dir(face.left.local)] != 0 {
            continue;
        }
        // walk away from the face on both sides; every entry face of a line
        // carries the same sign as its start
        for (start, sign) in [(face.left, 1i8), (right, -1i8)] {
            let mut side = start;
            while set(&mut plus, side.elem, side.local, sign) {
                match mesh.neighbor(side.elem, (side.local + 2) % 4) {
                    Some(next) => side = next,
                    None => break,
                }
            }
        }
    }
    for p in plus.iter_mut().flat_map(|p| p.iter_mut()) {
        if *p == 0 {
            *p = 1;
        }
    }
    SwitchAssignment { plus }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::quad::{annulus, perturb_interior, rectangle, unit_square};

    #[test]
    fn strip_has_uniform_direction() {
        let m = rectangle(6, 1, (0.0, 6.0), (0.0, 1.0), false, false).unwrap();
        let sw = assign_switches(&m);
        assert!(sw.violations(&m).is_empty());
        // element e is at x index e; its east face is face 1
        let east: Vec<i8> = (0..5).map(|e| sw.sign(e, 1)).collect();
        assert!(east.iter().all(|&s| s == east[0]));
    }

    #[test]
    fn consistent_on_various_meshes() {
        let meshes = vec![
            unit_square(5).unwrap(),
            rectangle(4, 3, (0.0, 1.0), (0.0, 1.0), true, true).unwrap(),
            perturb_interior(&unit_square(4).unwrap(), 0.2, 3).unwrap().refine_uniform().unwrap(),
            annulus(7, 3, 1.0, 4.0, 0.0, 2.0 * std::f64::consts::PI).unwrap(),
        ];
        for m in meshes {
            let sw = assign_switches(&m);
            assert!(sw.violations(&m).is_empty());
            assert!(sw.plus.iter().flatten().all(|&s| s == 1 || s == -1));
        }
    }

    #[test]
    fn first_face_gets_plus() {
        let m = unit_square(3).unwrap();
        let sw = assign_switches(&m);
        let f = m.faces.iter().find(|f| f.right.is_some()).unwrap();
        assert_eq!(sw.sign(f.left.elem, f.left.local), 1);
    }

    proptest::proptest! {
        #[test]
        fn switches_are_consistent_on_random_grids(
            nx in 1usize..7,
            ny in 1usize..7,
            px: bool,
            py: bool,
            jitter in 0.0f64..0.25,
            seed in 0u64..100,
        ) {
            let m = rectangle(nx.max(2), ny.max(2), (0.0, 2.0), (0.0, 1.0), px, py).unwrap();
            let m = perturb_interior(&m, jitter, seed).unwrap();
            let sw = assign_switches(&m);
            proptest::prop_assert!(sw.violations(&m).is_empty());
        }
    }
}
