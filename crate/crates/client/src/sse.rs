/// Server-sent event framing: `data:` lines accumulate until a blank line
/// dispatches them. Comments, `event:`, `id:` and `retry:` fields are
/// ignored. Input may arrive split anywhere, including inside a UTF-8
/// sequence or between `\r` and `\n`.
#[derive(Debug, Default, Clone)]
pub struct SseParser {
    line: Vec<u8>,
    data: Option<String>,
    after_cr: bool,
}

impl SseParser {
    /// Feeds bytes; returns the payloads of every event they complete.
    pub fn feed(&mut self, bytes: &[u8]) -> Vec<String> {
        let mut out = Vec::new();
        for &b in bytes {
            if self.after_cr {
                self.after_cr = false;
                if b == b'\n' {
                    continue;
                }
            }
            match b {
                b'\n' | b'\r' => {
                    self.after_cr = b == b'\r';
                    let line = std::mem::take(&mut self.line);
                    self.end_line(&String::from_utf8_lossy(&line), &mut out);
                }
                _ => self.line.push(b),
            }
        }
        out
    }

    fn end_line(&mut self, line: &str, out: &mut Vec<String>) {
        if line.is_empty() {
            if let Some(d) = self.data.take() {
                out.push(d);
            }
            return;
        }
        if line.starts_with(':') {
            return;
        }
        let (field, value) = match line.split_once(':') {
            Some((f, v)) => (f, v.strip_prefix(' ').unwrap_or(v)),
            None => (line, ""),
        };
        if field == "data" {
            match &mut self.data {
                Some(d) => {
                    d.push('\n');
                    d.push_str(value);
                }
                None => self.data = Some(value.to_string()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_event() {
        let mut p = SseParser::default();
        assert_eq!(p.feed(b"data: {\"seq\":1}\n\n"), ["{\"seq\":1}"]);
    }

    #[test]
    fn split_across_chunks_and_crlf() {
        let mut p = SseParser::default();
        let msg = "data: caf\u{e9}\r\n\r\ndata:x\r\ndata: y\r\n\r\n".as_bytes();
        let mut got = Vec::new();
        for chunk in msg.chunks(3) {
            got.extend(p.feed(chunk));
        }
        assert_eq!(got, ["caf\u{e9}", "x\ny"]);
    }

    #[test]
    fn comments_and_other_fields_are_ignored() {
        let mut p = SseParser::default();
        assert!(p.feed(b": keep-alive\n\n").is_empty());
        assert_eq!(p.feed(b"event: gesture\nid: 4\ndata: a\n\n"), ["a"]);
        assert!(p.feed(b"data: unterminated\n").is_empty());
        assert_eq!(p.feed(b"\n"), ["unterminated"]);
    }
}
