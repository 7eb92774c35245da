//! Plain-text PGM (P2) rendering for heatmaps. Row-major, one image row per
//! line; viewers everywhere can open the result without extra dependencies.

/// Renders `values` (row-major, `width * height`, each <= `maxval`) as a P2
/// grayscale image.
pub fn render_pgm(width: usize, height: usize, maxval: u32, values: &[u32]) -> String {
    assert_eq!(values.len(), width * height, "value buffer shape mismatch");
    assert!(maxval >= 1 && maxval <= 65535, "P2 maxval out of range");
    let mut out = String::new();
    out.push_str("P2\n");
    out.push_str(&format!("{width} {height}\n"));
    out.push_str(&format!("{maxval}\n"));
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.min(&maxval).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::render_pgm;

    #[test]
    fn renders_expected_layout() {
        let img = render_pgm(3, 2, 9, &[0, 1, 2, 3, 4, 9]);
        assert_eq!(img, "P2\n3 2\n9\n0 1 2\n3 4 9\n");
    }

    #[test]
    fn clamps_to_maxval() {
        let img = render_pgm(1, 1, 5, &[77]);
        assert!(img.ends_with("\n5\n5\n"));
    }
}
