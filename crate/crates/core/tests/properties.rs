use std::sync::OnceLock;

use proptest::prelude::*;
use weilrep_core::elliptic_torus::{build_embedding, conductor, TorusEmbedding};
use weilrep_core::heisenberg::{heis_inv, heis_mul, HeisElem, SchrodingerModel};
use weilrep_core::local_ring::{legendre_u64, RingParams};
use weilrep_core::symp_module::{
    b_module, transvection_group, FiniteGroup, SympModule, DEFAULT_GROUP_CAP,
};
use weilrep_core::weil_field::weil_index;
use weilrep_core::weil_ring::{build_ring_rep, RingWeilRep};
use weilrep_core::TorusParams;

const TOL: f64 = 1e-8;

struct RingCase {
    group: FiniteGroup,
    rep: RingWeilRep,
}

fn ring_case(
    slot: &'static OnceLock<RingCase>,
    p: u64,
    r: usize,
    l: usize,
    n: u32,
) -> &'static RingCase {
    slot.get_or_init(|| {
        let m = b_module(p, r, l, n).unwrap();
        RingCase {
            group: transvection_group(&m, DEFAULT_GROUP_CAP).unwrap(),
            rep: build_ring_rep(&m, usize::MAX).unwrap(),
        }
    })
}

static CASE_A: OnceLock<RingCase> = OnceLock::new();
static CASE_B: OnceLock<RingCase> = OnceLock::new();

fn cases() -> [&'static RingCase; 2] {
    [
        ring_case(&CASE_A, 3, 1, 0, 1),
        ring_case(&CASE_B, 3, 1, 1, 2),
    ]
}

fn torus() -> &'static TorusEmbedding {
    static T: OnceLock<TorusEmbedding> = OnceLock::new();
    T.get_or_init(|| build_embedding(&TorusParams::unramified(3, 0, 3).unwrap()).unwrap())
}

fn heis_elem(m: &SympModule, seed: &[u64], t: u64) -> HeisElem {
    HeisElem {
        w: m.reduce(&seed.iter().map(|&x| x as i128).collect::<Vec<_>>()),
        t: t % m.ring_modulus(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_inverse_roundtrip(p in prop::sample::select(vec![3u64, 5, 7]), m in 1u32..4, a in 0i128..10_000) {
        let r = RingParams::new(p, m).unwrap();
        let x = r.elem(a);
        match x.inv() {
            Some(y) => prop_assert_eq!(x * y, r.one()),
            None => prop_assert!(!x.is_unit()),
        }
    }

    #[test]
    fn legendre_is_multiplicative(p in prop::sample::select(vec![3u64, 5, 7, 11, 13]), a in 1u64..1000, b in 1u64..1000) {
        prop_assume!(a % p != 0 && b % p != 0);
        prop_assert_eq!(legendre_u64(a * b, p), legendre_u64(a, p) * legendre_u64(b, p));
    }

    #[test]
    fn weil_index_ratio_is_legendre(p in prop::sample::select(vec![3u64, 5, 7, 11, 13]), a in 1u64..1000) {
        prop_assume!(a % p != 0);
        let q = weil_index(p, 1).unwrap() / weil_index(p, a).unwrap();
        prop_assert!((q.re - legendre_u64(a, p) as f64).abs() < TOL && q.im.abs() < TOL);
    }

    #[test]
    fn heisenberg_group_laws(a in prop::collection::vec(0u64..1000, 2), b in prop::collection::vec(0u64..1000, 2),
                             c in prop::collection::vec(0u64..1000, 2), s in 0u64..1000, t in 0u64..1000) {
        let m = b_module(3, 1, 1, 2).unwrap();
        let (x, y, z) = (heis_elem(&m, &a, s), heis_elem(&m, &b, t), heis_elem(&m, &c, s + t));
        prop_assert_eq!(heis_mul(&m, &heis_mul(&m, &x, &y), &z), heis_mul(&m, &x, &heis_mul(&m, &y, &z)));
        let e = heis_mul(&m, &x, &heis_inv(&m, &x));
        prop_assert!(e.t == 0 && e.w.iter().all(|&v| v == 0));
    }

    #[test]
    fn schrodinger_is_a_representation(a in prop::collection::vec(0u64..1000, 2), b in prop::collection::vec(0u64..1000, 2),
                                       s in 0u64..1000, t in 0u64..1000) {
        let m = b_module(3, 1, 0, 1).unwrap();
        let model = SchrodingerModel::standard(&m).unwrap();
        let (x, y) = (heis_elem(&m, &a, s), heis_elem(&m, &b, t));
        let lhs = model.heis_op(&x).compose(&model.heis_op(&y)).to_dense();
        let rhs = model.heis_op(&heis_mul(&m, &x, &y)).to_dense();
        prop_assert!(lhs.max_dev(&rhs) < TOL);
    }

    #[test]
    fn ring_model_is_a_homomorphism(which in 0usize..2, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let c = cases()[which];
        let m = &c.rep.module;
        let (g, h) = (c.group.elem(i.index(c.group.order())), c.group.elem(j.index(c.group.order())));
        let lhs = c.rep.operator(&g).to_dense().mul(&c.rep.operator(&h).to_dense());
        let rhs = c.rep.operator(&m.mul(&g, &h)).to_dense();
        prop_assert!(lhs.max_dev(&rhs) < TOL);
    }

    #[test]
    fn ring_model_intertwines(which in 0usize..2, i in any::<prop::sample::Index>(),
                              w in prop::collection::vec(0u64..1000, 2), t in 0u64..1000) {
        let c = cases()[which];
        let m = &c.rep.module;
        let g = c.group.elem(i.index(c.group.order()));
        let h = heis_elem(m, &w, t);
        let gh = HeisElem { w: m.apply(&g, &h.w), t: h.t };
        let s = c.rep.operator(&g).to_dense();
        let lhs = s.mul(&c.rep.heis_operator(&h).to_dense());
        let rhs = c.rep.heis_operator(&gh).to_dense().mul(&s);
        prop_assert!(lhs.max_dev(&rhs) < TOL);
    }

    #[test]
    fn conductor_of_product_is_bounded(a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let emb = torus();
        let n = emb.order();
        let (a, b) = (a.index(n), b.index(n));
        prop_assert!(conductor(emb, (a + b) % n) <= conductor(emb, a).max(conductor(emb, b)));
        prop_assert_eq!(conductor(emb, (n - a) % n), conductor(emb, a));
    }
}
