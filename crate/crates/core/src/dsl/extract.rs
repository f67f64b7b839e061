use super::parse::parse_line;

/// Pulls the mechanism code out of an agent reply: the last fenced block if
/// there is one, else the longest run of consecutive statement lines.
pub fn extract_block(text: &str) -> Option<String> {
    last_fenced(text).or_else(|| longest_run(text))
}

fn last_fenced(text: &str) -> Option<String> {
    let mut last = None;
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(body) => last = Some(body.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(body) = current.as_mut() {
            body.push(line);
        }
    }
    // An unterminated fence runs to the end of the reply.
    if let Some(body) = current {
        last = Some(body.join("\n"));
    }
    last
}

fn longest_run(text: &str) -> Option<String> {
    // (statement count, lines) for the best run so far; later runs win ties.
    let mut best: Option<(usize, Vec<&str>)> = None;
    let mut run: Vec<&str> = Vec::new();
    let mut count = 0;
    let lines: Vec<&str> = text.lines().chain(std::iter::once("")).collect();
    for line in lines {
        let t = line.trim();
        let is_statement = !t.is_empty() && !t.starts_with('#') && matches!(parse_line::<f64>(line), Ok(Some(_)));
        if is_statement {
            run.push(line);
            count += 1;
        } else if t.starts_with('#') && count > 0 {
            run.push(line);
        } else {
            if count > 0 && best.as_ref().is_none_or(|(n, _)| count >= *n) {
                best = Some((count, std::mem::take(&mut run)));
            }
            run.clear();
            count = 0;
        }
    }
    best.map(|(_, lines)| lines.join("\n"))
}
