// M, k, t, M (1 - e^{-k t}) evaluated at 40 significant digits.
pub const FROZEN: &[(f64, f64, u32, f64)] = &[
    (0.8, 0.1, 5, 0.3147754722298932920581953),
    (0.9, 0.05, 30, 0.6991828558664131879314095),
    (1.0, 1e-09, 1, 9.999999995000000624482581e-10),
    (0.71, 0.77, 100, 0.7099999999999999644728632),
    (0.5, 1e-06, 3, 0.000001499997750002249930434872),
    (0.999, 0.999, 100, 0.9989999999999999991118216),
    (0.3, 0.0001, 1, 0.00002999850004999875035234039),
    (0.727507, 0.174844, 98, 0.7275069736775502325797148),
    (0.14953, 0.481578, 65, 0.1495299999999961926512373),
    (0.330744, 0.357927, 67, 0.3307439999872758358043789),
    (0.354508, 0.152332, 69, 0.3544983440124764971403328),
    (0.436115, 0.310532, 56, 0.4361149877732701049808530),
    (0.432432, 0.2365, 89, 0.4324319996876291887377951),
    (0.840554, 0.705107, 84, 0.8405540000000000233626451),
    (0.503242, 0.625142, 80, 0.5032419999999999671301971),
    (0.402938, 0.785697, 96, 0.4029380000000000183746351),
    (0.421982, 0.200795, 9, 0.3527261471560732761494877),
    (0.702392, 0.215632, 48, 0.7023695360695513023892008),
    (0.09774, 0.853565, 6, 0.09715671485234114646832341),
    (0.369947, 0.391902, 15, 0.3689115565882375299792603),
];
