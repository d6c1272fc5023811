use proptest::prelude::*;
use roughbsde::rough_path::GroupIncrement;

fn segments(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0_f64, dim), 1..6)
}

fn signature(segs: &[Vec<f64>], degree: usize) -> GroupIncrement {
    segs.iter().fold(GroupIncrement::identity(segs[0].len(), degree).unwrap(), |acc, s| {
        acc.concat(&GroupIncrement::segment(s, degree).unwrap()).unwrap()
    })
}

proptest! {
    #[test]
    fn chen_product_is_associative(a in segments(2), b in segments(2), c in segments(2)) {
        let (x, y, z) = (signature(&a, 3), signature(&b, 3), signature(&c, 3));
        let left = x.concat(&y).unwrap().concat(&z).unwrap();
        let right = x.concat(&y.concat(&z).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-10);
    }

    #[test]
    fn inverse_cancels(a in segments(3)) {
        let x = signature(&a, 3);
        let id = GroupIncrement::identity(3, 3).unwrap();
        prop_assert!(x.concat(&x.inverse()).unwrap().max_abs_diff(&id) < 1e-10);
        prop_assert!(x.inverse().concat(&x).unwrap().max_abs_diff(&id) < 1e-10);
    }

    #[test]
    fn polyline_signatures_are_geometric(a in segments(2)) {
        let x = signature(&a, 3);
        prop_assert!(x.geometric_defect() < 1e-10);
        prop_assert!(x.level3_symmetric_defect() < 1e-10);
    }

    #[test]
    fn area_is_antisymmetric(a in segments(3)) {
        let x = signature(&a, 2);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((x.area(i, j) + x.area(j, i)).abs() < 1e-12);
            }
        }
    }
}
