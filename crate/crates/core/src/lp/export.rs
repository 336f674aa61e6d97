//! Fixed MPS-style text export of an [`LpProgram`].
//!
//! Sections, in order: `NAME`, `ROWS`, `COLUMNS`, `RHS`, `BOUNDS`, `ENDATA`.
//! Fields are separated by single spaces (free MPS). Row names are `COST`,
//! `CARD`, `CAP_<i>_<j>` and `DEM_<j>_<l>`; column names `Y<i>` and
//! `X<i>_<j>_<l>`. Every column gets explicit `LO` and `UP` bounds.

use std::fmt::Write;

use super::{LpProgram, RowFamily, RowKind};

fn row_name(family: RowFamily) -> String {
    match family {
        RowFamily::Cardinality => "CARD".into(),
        RowFamily::Capacity { facility, client } => format!("CAP_{facility}_{client}"),
        RowFamily::Demand { client, copy } => format!("DEM_{client}_{copy}"),
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn to_mps(prog: &LpProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n N COST\n");
    for row in prog.rows() {
        let tag = match row.kind {
            RowKind::Le => "L",
            RowKind::Eq => "E",
            RowKind::Ge => "G",
        };
        let _ = writeln!(out, " {tag} {}", row_name(row.family));
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); prog.num_variables()];
    for (r, row) in prog.rows().iter().enumerate() {
        for &(v, a) in &row.entries {
            columns[v].push((r, a));
        }
    }
    out.push_str("COLUMNS\n");
    for (v, col) in columns.iter().enumerate() {
        let var = prog.variable_name(v);
        let c = prog.objective()[v];
        if c != 0.0 {
            let _ = writeln!(out, " {var} COST {}", num(c));
        }
        for &(r, a) in col {
            let _ = writeln!(out, " {var} {} {}", row_name(prog.rows()[r].family), num(a));
        }
    }
    out.push_str("RHS\n");
    for row in prog.rows() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", row_name(row.family), num(row.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for v in 0..prog.num_variables() {
        let (lo, up) = prog.bounds(v);
        let var = prog.variable_name(v);
        let _ = writeln!(out, " LO BND {var} {}", num(lo));
        let _ = writeln!(out, " UP BND {var} {}", num(up));
    }
    out.push_str("ENDATA\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::build_lp;
    use crate::model::{Instance, WeightVector};

    #[test]
    fn layout() {
        let w = WeightVector::<f64>::harmonic(1).unwrap();
        let inst = Instance::new(2, vec![vec![1.0, 2.0]], w, None).unwrap();
        let text = to_mps(&build_lp(&inst).unwrap(), "tiny");
        let expected = "NAME tiny
ROWS
 N COST
 E CARD
 L CAP_0_0
 L CAP_1_0
 G DEM_0_0
COLUMNS
 Y0 CARD 1.0
 Y0 CAP_0_0 -1.0
 Y1 CARD 1.0
 Y1 CAP_1_0 -1.0
 X0_0_0 COST 1.0
 X0_0_0 CAP_0_0 1.0
 X0_0_0 DEM_0_0 1.0
 X1_0_0 COST 2.0
 X1_0_0 CAP_1_0 1.0
 X1_0_0 DEM_0_0 1.0
RHS
 RHS CARD 1.0
 RHS DEM_0_0 1.0
BOUNDS
 LO BND Y0 0.0
 UP BND Y0 1.0
 LO BND Y1 0.0
 UP BND Y1 1.0
 LO BND X0_0_0 0.0
 UP BND X0_0_0 1.0
 LO BND X1_0_0 0.0
 UP BND X1_0_0 1.0
ENDATA
";
        assert_eq!(text, expected);
    }
}
