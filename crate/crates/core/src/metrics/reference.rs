//! Published full-scale results, kept for side-by-side display in reports.
//! Synthetic runs are never judged against these numbers.

/// One published result: macro and micro AUC in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub table: &'static str,
    pub row: &'static str,
    pub macro_auc: f64,
    pub micro_auc: Option<f64>,
}

const fn row(table: &'static str, row: &'static str, macro_auc: f64, micro_auc: f64) -> ReferenceRow {
    ReferenceRow {
        table,
        row,
        macro_auc,
        micro_auc: Some(micro_auc),
    }
}

const ROWS: &[ReferenceRow] = &[
    row("finetune", "None", 55.76, 69.55),
    row("finetune", "3", 81.47, 86.00),
    row("finetune", "6", 83.00, 86.98),
    row("chunks-linear", "Front", 76.66, 81.52),
    row("chunks-linear", "Mixed", 76.09, 81.18),
    row("chunks-linear", "Back", 74.23, 80.35),
    row("chunks-mlp", "Front", 82.35, 86.91),
    row("chunks-mlp", "Mixed", 81.69, 86.25),
    row("chunks-mlp", "Back", 78.04, 83.73),
    row("combinations", "Front-Back", 83.70, 88.11),
    row("combinations", "Front-Back-Mixed", 84.42, 88.58),
    row("decoders", "Flat (1.5M)", 84.42, 88.58),
    row("decoders", "Flat L (3M)", 84.30, 88.45),
    row("decoders", "Flat XL (7M)", 84.30, 88.47),
    row("decoders", "Parallel (1M)", 84.45, 88.65),
    row("decoders", "Parallel L (2M)", 84.23, 88.48),
    row("decoders", "Parallel XL (3M)", 84.51, 88.49),
    row("decoders", "Transformer (6.5M)", 84.30, 88.49),
    row("decoders", "Transformer L (14M)", 84.27, 88.45),
    row("decoders", "Transformer XL (18M)", 84.29, 88.08),
    row("paragraph", "FBM-Par", 84.7, 88.8),
    row("paragraph", "Transf", 68.9, 76.8),
    row("paragraph", "Transf-L", 68.7, 76.6),
    row("paragraph", "Transf-XL", 68.8, 76.6),
    row("all", "FBM-Par", 84.7, 88.8),
    row("all", "Transf", 45.3, 64.9),
    row("all", "Transf-L", 48.0, 68.1),
    row("all", "Transf-XL", 50.5, 68.7),
    ReferenceRow {
        table: "baselines",
        row: "C-MemNN",
        macro_auc: 83.3,
        micro_auc: None,
    },
    row("baselines", "LEAM", 88.1, 91.2),
    row("baselines", "CAML", 87.5, 90.9),
    row("baselines", "DR-CAML", 88.0, 90.2),
    row("baselines", "MSATT-KG", 91.4, 93.6),
    row("baselines", "Label Attention", 92.1, 94.6),
    row("baselines", "BERT-ICD", 84.45, 88.65),
];

pub fn reference_table() -> &'static [ReferenceRow] {
    ROWS
}

/// Looks up a row by table and row name.
pub fn reference(table: &str, name: &str) -> Option<ReferenceRow> {
    ROWS.iter().find(|r| r.table == table && r.row == name).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        let r = reference("finetune", "6").unwrap();
        assert_eq!((r.macro_auc, r.micro_auc), (83.00, Some(86.98)));
        let r = reference("all", "Transf-XL").unwrap();
        assert_eq!((r.macro_auc, r.micro_auc), (50.5, Some(68.7)));
        let r = reference("baselines", "Label Attention").unwrap();
        assert_eq!((r.macro_auc, r.micro_auc), (92.1, Some(94.6)));
        assert_eq!(reference("baselines", "C-MemNN").unwrap().micro_auc, None);
        assert!(reference("baselines", "nope").is_none());
    }
}
