//! Every report record points at one of these statements. A record whose
//! anchor is missing here is a bug.

pub struct Anchor {
    pub id: &'static str,
    pub statement: &'static str,
}

pub const ANCHORS: &[Anchor] = &[
    Anchor {
        id: "geometry.sandwich",
        statement: "c R ∫_{C_{R/2,l+R/2}} f ≤ ∫_{-l}^{l} ∫_{B_R} f(y + t e) dy dt ≤ 2R ∫_{C_{R,l+R}} f",
    },
    Anchor {
        id: "geometry.chord",
        statement: "|{t ∈ [-l, l] : |x - t e| < R}| = min{2√(R²-ρ²), (√(R²-ρ²) + l - |x₁|)₊}",
    },
    Anchor {
        id: "maximal.streamwise",
        statement: "streamwise maximal function along trajectories of the flow map",
    },
    Anchor {
        id: "maximal.strong_pp",
        statement: "‖M_Φ f‖_p ≲ ‖f‖_p for measure-preserving flows",
    },
    Anchor {
        id: "maximal.weak_norm",
        statement: "weak-Lᵖ quasi-norm sup_α α |{|f| > α}|^{1/p}",
    },
    Anchor {
        id: "maximal.proximity",
        statement: "|Φ_s(B_R(x)) ∩ B_R(Φ_s x)| comparable to |B_R| along drift trajectories",
    },
    Anchor {
        id: "construction.root",
        statement: "the capsule radius solves Ξ̃ L^{1-δ} R^{1+δ} = ε₀",
    },
    Anchor {
        id: "construction.classification",
        statement: "points are round (L = R) or long (L > R)",
    },
    Anchor {
        id: "covering.vitali",
        statement: "greedy selection yields pairwise disjoint capsules, each input meeting a selected capsule of at least half its radius",
    },
    Anchor {
        id: "covering.coverage",
        statement: "the K-dilated selection covers the family and |⋃C| ≤ Σ|K C_i|",
    },
    Anchor {
        id: "functionals.line_integral",
        statement: "∫_{x-Le}^{x+Le} u · dℓ is comparable to 2LU when |u - b| ≤ U/2",
    },
    Anchor {
        id: "functionals.stream_moment",
        statement: "∫(ψ - ψ̄)·(e × (y-x)) = ∫ u·(e·(y-x))(y-x) for u = curl ψ",
    },
    Anchor {
        id: "functionals.thresholds",
        statement: "integrability thresholds p(α) = 4/(1-α), p(β) = (4 - 2β(δ+1)/(2+σ))/(1-β)",
    },
    Anchor {
        id: "functionals.competitors",
        statement: "competing exponents (s-3)/(6(s-1)) and min{1/3 - 1/s, 1/6}",
    },
    Anchor {
        id: "oseen.residual",
        statement: "b·∇Γ - νΔΓ = 0 away from the origin",
    },
    Anchor {
        id: "oseen.gradient",
        statement: "∇Γ = Γ(-(1/r + λ)x̂ + λe₁) and |∇Γ| ≤ (√2/4πν) r^{-3/2}(r-x₁)^{-1/2}",
    },
    Anchor {
        id: "oseen.delta",
        statement: "∫_{∂B_r} νΓ/r dσ → 1 as r → 0",
    },
    Anchor {
        id: "oseen.mixed_norm",
        statement: "∫_{ℝ²} [r^{-3/2}(r-x₁)^{-1/2}]^{3/2} dx₂dx₃ ≤ 4/|x₁|",
    },
    Anchor {
        id: "oseen.capsule_norm",
        statement: "∫_{3C} r^{-3/2} ≤ C R^{3/2} uniformly in L",
    },
    Anchor {
        id: "oseen.local_estimate",
        statement: "‖θ‖_{L^r(C/2)} ≲ R‖f‖_q + ‖g‖_q + (UR/L + 1/R)‖θ‖_q, 1/r = 1/q - 1/3",
    },
    Anchor {
        id: "biot_savart.inversion",
        statement: "v = curl(-Δ)⁻¹(φω) satisfies curl v = φω where div(φω) = 0",
    },
    Anchor {
        id: "biot_savart.decay",
        statement: "Biot–Savart velocity of a compactly supported source decays like |x|⁻²",
    },
    Anchor {
        id: "kernel.table",
        statement: "tabulated Γ, ∇Γ and residuals",
    },
];

pub fn lookup(id: &str) -> Option<&'static Anchor> {
    ANCHORS.iter().find(|a| a.id == id)
}
