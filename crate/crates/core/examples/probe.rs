use nmsys::certificate::certify;
use nmsys::checker::check_certificate;
use nmsys::decomposition::Policy;
use nmsys::setsystem::{validate_nm_system, SetFamily};

fn main() {
    // five 9-sets over [22]: sets 0..3 run two stages, set 4 dies at stage 0
    // with padding garbage 19..22 to reach uniform size
    let fam = SetFamily::from_sets(
        22,
        &[
            &[2, 3, 4, 5, 7, 8, 9, 11, 15],
            &[1, 3, 4, 5, 6, 8, 9, 12, 16],
            &[1, 2, 4, 5, 6, 7, 9, 13, 17],
            &[1, 2, 3, 5, 6, 7, 8, 14, 18],
            &[1, 2, 3, 4, 10, 19, 20, 21, 22],
        ],
    );
    match validate_nm_system(&fam) {
        Ok(sys) => {
            println!("GENUINE: n={} k={} m={} ell={}", sys.n(), sys.k(), sys.m(), sys.ell());
            let cert = certify(&fam, &Policy::default());
            println!(
                "status={:?} ok={} t={:?} rules={:?} arcs={:?} h={:?} F={:?}",
                cert.status,
                cert.ok,
                cert.decomposition.as_ref().map(|d| d.t),
                cert.pairs.as_ref().map(|ps| ps.iter().map(|p| p.rules.len()).sum::<usize>()),
                cert.digraph.as_ref().map(|g| g.arcs.len()),
                cert.skew_bound.map(|b| b.h),
                cert.free_marking.as_ref().map(|f| f.independent.len()),
            );
            println!("checked={}", check_certificate(&cert).unwrap());
        }
        Err(e) => println!("not genuine: {e}"),
    }
}
