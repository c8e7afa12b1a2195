//! Balance sheets, financial systems, trigger shocks and the accounting auditor.

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::exposure::ExposureMatrix;

/// Default relative tolerance for accounting-identity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Mark-to-market balance sheet of one bank.
///
/// Assets: interbank `z`, external fixed `a`, external liquid `c`.
/// Liabilities: interbank `x`, external `d`, equity `e`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BalanceSheet {
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

impl BalanceSheet {
    pub fn new(z: f64, a: f64, c: f64, x: f64, d: f64, e: f64) -> Self {
        Self { z, a, c, x, d, e }
    }

    /// `Z + A + C - X - D - E`.
    pub fn identity_residual(&self) -> f64 {
        (self.z + self.a + self.c) - (self.x + self.d + self.e)
    }

    /// Scale used for relative identity checks.
    pub fn scale(&self) -> f64 {
        self.z.abs() + self.a.abs() + self.c.abs() + self.x.abs() + self.d.abs() + self.e.abs() + 1.0
    }

    pub fn total_assets(&self) -> f64 {
        self.z + self.a + self.c
    }

    /// Asset/liability interchange: `A <-> D`, `Z <-> X`, `C <-> E`.
    pub fn al_dual(&self) -> Self {
        Self {
            z: self.x,
            a: self.d,
            c: self.e,
            x: self.z,
            d: self.a,
            e: self.c,
        }
    }
}

/// Solvency and liquidity status of a bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankStatus {
    pub solvent: bool,
    pub liquid: bool,
    pub impaired: bool,
}

impl BankStatus {
    /// Classify with `E > eps` solvent and `C > eps` liquid, where `eps` is
    /// `tol` times the balance-sheet scale.
    pub fn classify(sheet: &BalanceSheet, tol: f64) -> Self {
        let eps = tol * sheet.scale();
        let solvent = sheet.e > eps;
        let liquid = sheet.c > eps;
        Self {
            solvent,
            liquid,
            impaired: !solvent || !liquid,
        }
    }

    pub fn healthy() -> Self {
        Self {
            solvent: true,
            liquid: true,
            impaired: false,
        }
    }
}

/// A network of banks with their balance sheets and interbank exposures.
#[derive(Debug, Clone, PartialEq)]
pub struct FinancialSystem {
    pub balance_sheets: Vec<BalanceSheet>,
    pub exposures: ExposureMatrix,
    /// When set, bank 0 is a never-defaulting stand-in for the exterior.
    pub fictitious_bank: bool,
}

impl FinancialSystem {
    pub fn new(balance_sheets: Vec<BalanceSheet>, exposures: ExposureMatrix) -> Result<Self> {
        if balance_sheets.is_empty() {
            return Err(CascadeError::Empty);
        }
        if balance_sheets.len() != exposures.n() {
            return Err(CascadeError::DimensionMismatch {
                balance_sheets: balance_sheets.len(),
                matrix: exposures.n(),
            });
        }
        Ok(Self {
            balance_sheets,
            exposures,
            fictitious_bank: false,
        })
    }

    /// Build balance sheets from the exposures plus external entries
    /// `(A, C, D)`, with equity closing the identity.
    pub fn from_external(exposures: ExposureMatrix, external: &[(f64, f64, f64)]) -> Result<Self> {
        if external.len() != exposures.n() {
            return Err(CascadeError::DimensionMismatch {
                balance_sheets: external.len(),
                matrix: exposures.n(),
            });
        }
        let z = exposures.col_sums();
        let x = exposures.row_sums();
        let sheets = external
            .iter()
            .enumerate()
            .map(|(i, &(a, c, d))| BalanceSheet::new(z[i], a, c, x[i], d, z[i] + a + c - x[i] - d))
            .collect();
        Self::new(sheets, exposures)
    }

    pub fn n_banks(&self) -> usize {
        self.balance_sheets.len()
    }

    /// Whether bank `i` is the fictitious bank (exempt from restructuring and liquidation).
    pub fn is_fictitious(&self, i: usize) -> bool {
        self.fictitious_bank && i == 0
    }

    pub fn status(&self, tol: f64) -> Vec<BankStatus> {
        self.balance_sheets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if self.is_fictitious(i) {
                    BankStatus::healthy()
                } else {
                    BankStatus::classify(s, tol)
                }
            })
            .collect()
    }

    pub fn total_fixed_assets(&self) -> f64 {
        self.balance_sheets.iter().map(|s| s.a).sum()
    }

    pub fn total_external_debt(&self) -> f64 {
        self.balance_sheets.iter().map(|s| s.d).sum()
    }
}

/// Balance-sheet field names used in violation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Z,
    A,
    C,
    X,
    D,
    E,
}

/// One violated accounting constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `Z + A + C != X + D + E`; `residual` is assets minus liabilities.
    Identity { bank: usize, residual: f64 },
    /// `X_i` differs from the row sum of the exposure matrix.
    RowSum { bank: usize, recorded: f64, from_exposures: f64 },
    /// `Z_i` differs from the column sum of the exposure matrix.
    ColumnSum { bank: usize, recorded: f64, from_exposures: f64 },
    Negative { bank: usize, field: Field, value: f64 },
    NegativeExposure { debtor: usize, creditor: usize, value: f64 },
    NonzeroDiagonal { bank: usize, value: f64 },
    /// Total interbank assets differ from total interbank debts.
    SystemImbalance { interbank_assets: f64, interbank_debts: f64 },
}

/// Machine-readable audit outcome. Empty means valid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn off(diff: f64, scale: f64, tol: f64) -> bool {
    !(diff.abs() <= tol * scale)
}

/// Check every accounting constraint of a system at relative tolerance `tol`.
///
/// Nonnegativity is enforced for `Z, A, X, D`; `C` and `E` may be negative
/// in stressed states. Use [`validate_nominal`] for pre-trigger systems.
pub fn validate_system(system: &FinancialSystem, tol: f64) -> Result<ValidationReport> {
    audit(system, tol, false)
}

/// [`validate_system`] plus `C, E >= 0`, as required of nominal balance sheets.
pub fn validate_nominal(system: &FinancialSystem, tol: f64) -> Result<ValidationReport> {
    audit(system, tol, true)
}

fn audit(system: &FinancialSystem, tol: f64, nominal: bool) -> Result<ValidationReport> {
    let n = system.n_banks();
    if n == 0 {
        return Err(CascadeError::Empty);
    }
    if system.exposures.n() != n {
        return Err(CascadeError::DimensionMismatch {
            balance_sheets: n,
            matrix: system.exposures.n(),
        });
    }
    let mut v = Vec::new();
    let omega = &system.exposures;
    for (i, j, w) in omega.triplets() {
        if i == j {
            v.push(Violation::NonzeroDiagonal { bank: i, value: w });
        }
        if w < 0.0 {
            v.push(Violation::NegativeExposure {
                debtor: i,
                creditor: j,
                value: w,
            });
        }
    }
    let x = omega.row_sums();
    let z = omega.col_sums();
    for (i, s) in system.balance_sheets.iter().enumerate() {
        let scale = s.scale();
        let r = s.identity_residual();
        if off(r, scale, tol) {
            v.push(Violation::Identity { bank: i, residual: r });
        }
        let row_abs: f64 = omega.row(i).map(|(_, w)| w.abs()).sum();
        if off(s.x - x[i], s.x.abs() + row_abs + 1.0, tol) {
            v.push(Violation::RowSum {
                bank: i,
                recorded: s.x,
                from_exposures: x[i],
            });
        }
        let col_abs: f64 = omega.col(i).map(|(_, w)| w.abs()).sum();
        if off(s.z - z[i], s.z.abs() + col_abs + 1.0, tol) {
            v.push(Violation::ColumnSum {
                bank: i,
                recorded: s.z,
                from_exposures: z[i],
            });
        }
        let mut fields = vec![(Field::Z, s.z), (Field::A, s.a), (Field::X, s.x), (Field::D, s.d)];
        if nominal {
            fields.push((Field::C, s.c));
            fields.push((Field::E, s.e));
        }
        for (field, value) in fields {
            if value < -tol * scale {
                v.push(Violation::Negative { bank: i, field, value });
            }
        }
    }
    let tz: f64 = system.balance_sheets.iter().map(|s| s.z).sum();
    let tx: f64 = system.balance_sheets.iter().map(|s| s.x).sum();
    let tscale: f64 = system.balance_sheets.iter().map(|s| s.z.abs() + s.x.abs()).sum::<f64>() + 1.0;
    if off(tz - tx, tscale, tol) {
        v.push(Violation::SystemImbalance {
            interbank_assets: tz,
            interbank_debts: tx,
        });
    }
    Ok(ValidationReport { violations: v })
}

/// Per-bank trigger: asset price shocks `delta_a <= 0` (taken from `A` and `E`)
/// and deposit withdrawals `delta_d <= 0` (taken from `D` and `C`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriggerShock {
    #[serde(rename = "delta_A")]
    pub delta_a: Vec<f64>,
    #[serde(rename = "delta_D")]
    pub delta_d: Vec<f64>,
}

impl TriggerShock {
    pub fn zero(n: usize) -> Self {
        Self {
            delta_a: vec![0.0; n],
            delta_d: vec![0.0; n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.delta_a.iter().chain(&self.delta_d).all(|&v| v == 0.0)
    }
}

/// Apply a trigger shock. Each component must be nonpositive and no larger in
/// magnitude than the entry it hits; the result may have negative `C` or `E`.
pub fn apply_trigger(system: &FinancialSystem, shock: &TriggerShock) -> Result<FinancialSystem> {
    let n = system.n_banks();
    for (what, v) in [("delta_A", &shock.delta_a), ("delta_D", &shock.delta_d)] {
        if v.len() != n {
            return Err(CascadeError::LengthMismatch {
                what,
                got: v.len(),
                expected: n,
            });
        }
    }
    let mut out = system.clone();
    for (i, s) in out.balance_sheets.iter_mut().enumerate() {
        let (da, dd) = (shock.delta_a[i], shock.delta_d[i]);
        if !(da <= 0.0) || !(dd <= 0.0) {
            return Err(CascadeError::InfeasibleShock {
                bank: i,
                reason: format!("shocks must be nonpositive (delta_A={da}, delta_D={dd})"),
            });
        }
        if -da > s.a {
            return Err(CascadeError::InfeasibleShock {
                bank: i,
                reason: format!("asset shock {} exceeds fixed assets {}", -da, s.a),
            });
        }
        if -dd > s.d {
            return Err(CascadeError::InfeasibleShock {
                bank: i,
                reason: format!("withdrawal {} exceeds external debt {}", -dd, s.d),
            });
        }
        s.a += da;
        s.e += da;
        s.d += dd;
        s.c += dd;
    }
    Ok(out)
}

/// Asset/liability dual: swap `A <-> D`, `Z <-> X`, `C <-> E` per bank and
/// transpose the exposures. An involution.
pub fn al_dual(system: &FinancialSystem) -> FinancialSystem {
    FinancialSystem {
        balance_sheets: system.balance_sheets.iter().map(BalanceSheet::al_dual).collect(),
        exposures: system.exposures.transpose(),
        fictitious_bank: system.fictitious_bank,
    }
}

/// Exposures of a fictitious bank 0 to and from the real banks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FictitiousBank {
    /// New loans from bank 0 to bank `i`, received by `i` as cash.
    pub lends: Vec<f64>,
    /// Loans from bank `i` to bank 0, paid out of `i`'s cash.
    pub borrows: Vec<f64>,
    /// External debt of bank `i` re-booked as interbank debt owed to bank 0
    /// (equal seniority with interbank debt).
    pub senior_debt: Vec<f64>,
}

/// Prepend a fictitious bank that lends `loans_to_banks[i]` to bank `i` and
/// takes over `senior_like_debt[i]` of bank `i`'s external debt.
pub fn add_fictitious_bank(
    system: &FinancialSystem,
    loans_to_banks: &[f64],
    senior_like_debt: &[f64],
) -> Result<FinancialSystem> {
    add_fictitious_bank_with(
        system,
        &FictitiousBank {
            lends: loans_to_banks.to_vec(),
            borrows: vec![0.0; system.n_banks()],
            senior_debt: senior_like_debt.to_vec(),
        },
    )
}

/// Prepend a fictitious bank at index 0 with the given exposures. Bank 0's
/// external entries close its identity; it is exempt from every cascade step.
pub fn add_fictitious_bank_with(system: &FinancialSystem, spec: &FictitiousBank) -> Result<FinancialSystem> {
    if system.fictitious_bank {
        return Err(CascadeError::Config("system already has a fictitious bank".into()));
    }
    let n = system.n_banks();
    for (what, v) in [
        ("lends", &spec.lends),
        ("borrows", &spec.borrows),
        ("senior_debt", &spec.senior_debt),
    ] {
        if v.len() != n {
            return Err(CascadeError::LengthMismatch {
                what,
                got: v.len(),
                expected: n,
            });
        }
        if let Some(i) = v.iter().position(|&x| !(x >= 0.0)) {
            return Err(CascadeError::Config(format!("{what}[{i}] must be nonnegative")));
        }
    }
    let mut sheets = Vec::with_capacity(n + 1);
    sheets.push(BalanceSheet::default());
    let mut triplets = system.exposures.shifted(1);
    for (i, s) in system.balance_sheets.iter().enumerate() {
        let mut s = *s;
        let (lend, borrow, senior) = (spec.lends[i], spec.borrows[i], spec.senior_debt[i]);
        if senior > s.d {
            return Err(CascadeError::Config(format!(
                "senior_debt[{i}] = {senior} exceeds external debt {}",
                s.d
            )));
        }
        if borrow > 0.0 && borrow > s.c {
            return Err(CascadeError::Config(format!(
                "borrows[{i}] = {borrow} exceeds liquid assets {}",
                s.c
            )));
        }
        s.x += lend + senior;
        s.c += lend;
        s.d -= senior;
        s.z += borrow;
        s.c -= borrow;
        if lend + senior > 0.0 {
            triplets.push((i + 1, 0, lend + senior));
        }
        if borrow > 0.0 {
            triplets.push((0, i + 1, borrow));
        }
        sheets.push(s);
    }
    let exposures = ExposureMatrix::from_triplets(n + 1, triplets)?;
    let z0: f64 = exposures.col(0).map(|(_, v)| v).sum();
    let x0: f64 = exposures.row(0).map(|(_, v)| v).sum();
    sheets[0] = if z0 >= x0 {
        BalanceSheet::new(z0, 0.0, 0.0, x0, z0 - x0, 0.0)
    } else {
        BalanceSheet::new(z0, 0.0, x0 - z0, x0, 0.0, 0.0)
    };
    let mut out = FinancialSystem::new(sheets, exposures)?;
    out.fictitious_bank = true;
    Ok(out)
}

/// Recast a system so that liquid assets are held as loans to a fictitious
/// bank 0: every bank's cash becomes an interbank claim on bank 0 and its
/// cash balance is set to zero. Under the liquidity cascade, withdrawals are
/// then met by selling cash and interbank assets in equal proportion.
pub fn cash_as_fictitious_loans(system: &FinancialSystem) -> Result<FinancialSystem> {
    let n = system.n_banks();
    let borrows = system.balance_sheets.iter().map(|s| s.c.max(0.0)).collect();
    add_fictitious_bank_with(
        system,
        &FictitiousBank {
            lends: vec![0.0; n],
            borrows,
            senior_debt: vec![0.0; n],
        },
    )
}
