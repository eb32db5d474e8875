use std::fmt::Write;

use anyhow::Result;
use serde::Serialize;

use semgrid::{iou_per_class, mean_iou, ClassId, ConfusionMatrix};

#[derive(Serialize)]
pub struct ClassRow {
    pub class: &'static str,
    pub iou: Option<f64>,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

#[derive(Serialize)]
pub struct Report {
    pub classes: Vec<ClassRow>,
    pub miou: f64,
    pub cells: u64,
}

impl Report {
    pub fn new(cm: &ConfusionMatrix) -> Result<Self> {
        let ious = iou_per_class(cm);
        let classes = ClassId::ALL
            .iter()
            .map(|&c| ClassRow {
                class: c.name(),
                iou: ious[c.index()],
                true_positives: cm.true_positives(c),
                false_positives: cm.false_positives(c),
                false_negatives: cm.false_negatives(c),
            })
            .collect();
        Ok(Report {
            classes,
            miou: mean_iou(&ious)?,
            cells: cm.total(),
        })
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>8} {:>10} {:>10} {:>10}", "class", "IoU", "TP", "FP", "FN");
        for row in &self.classes {
            let iou = row.iou.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v));
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>10} {:>10} {:>10}",
                row.class, iou, row.true_positives, row.false_positives, row.false_negatives
            );
        }
        let _ = writeln!(out, "{:<12} {:>8.2}", "mIoU", 100.0 * self.miou);
        let _ = writeln!(out, "{:<12} {:>8}", "cells", self.cells);
        out
    }

    pub fn json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
