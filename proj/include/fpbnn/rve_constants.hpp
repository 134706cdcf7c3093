#pragma once

// Frozen constants of the synthetic composite oracle. Changing any value
// changes every materials-benchmark number; bump kOracleVersion when doing so.
//
// Inputs (physical units):
//   vf   fibre volume fraction        [0, 0.5]
//   E_f  fibre Young's modulus, GPa   [200, 400]
//   b_m  matrix hardening modulus, MPa [200, 600]
//   c_m  matrix hardening exponent    [0.2, 0.6]
//
// Outputs:
//   b_eff = b_m * (1 + 2 vf E_f / (E_f + 2 E_m))
//   c_eff = c_m * (1 - 0.25 vf) * (1 + 0.05 (b_m - 400) / 200)
//   E_eff = E_m (1 + xi eta vf) / (1 - eta vf),  eta = (E_f/E_m - 1) / (E_f/E_m + xi)
//   nu_eff = nu_m (1 - vf) + nu_f vf
//   p_sigma = logistic(p0 + p_vf (vf - 0.25) / 0.25 + p_Ef (E_f - 300) / 100
//                      + p_bm (b_m - 400) / 200 + p_cm (c_m - 0.4) / 0.2)

namespace fpbnn::rve {

inline constexpr int kOracleVersion = 1;

inline constexpr double kMatrixModulus = 70.0;     // E_m, GPa
inline constexpr double kMatrixPoisson = 0.33;     // nu_m
inline constexpr double kFibrePoisson = 0.20;      // nu_f
inline constexpr double kHalpinTsaiXi = 2.0;

inline constexpr double kBHardeningGain = 2.0;
inline constexpr double kCVfDrop = 0.25;
inline constexpr double kCBmCoupling = 0.05;

inline constexpr double kP0 = -1.0;
inline constexpr double kPVf = 1.0;
inline constexpr double kPEf = 0.5;
inline constexpr double kPBm = 0.8;
inline constexpr double kPCm = -1.0;

inline constexpr double kVfLo = 0.0, kVfHi = 0.5;
inline constexpr double kEfLo = 200.0, kEfHi = 400.0;
inline constexpr double kBmLo = 200.0, kBmHi = 600.0;
inline constexpr double kCmLo = 0.2, kCmHi = 0.6;

// Coefficients of variation of the multiplicative noise, output order.
inline constexpr double kCoV[5] = {0.03, 0.02, 0.005, 0.002, 0.25};

// Yield offset of the matrix power law sigma = a + b eps^c, MPa.
inline constexpr double kYieldOffset = 400.0;

}  // namespace fpbnn::rve
