use super::PetriNet;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// GraphViz rendering: places as circles, transitions as boxes.
pub fn export_dot(net: &PetriNet, names: &[String]) -> Vec<u8> {
    let mut out = String::from("digraph petrinet {\n  rankdir=LR;\n");
    out.push_str("  source [shape=circle, label=\"•\"];\n  sink [shape=doublecircle, label=\"\"];\n");
    for (i, p) in net.places().iter().enumerate() {
        out.push_str(&format!("  p{i} [shape=circle, label=\"\", tooltip={}];\n", quote(&p.label(names))));
    }
    for a in net.activities().iter() {
        out.push_str(&format!("  t{a} [shape=box, label={}];\n", quote(&names[a])));
    }
    out.push_str(&format!("  source -> t{};\n  t{} -> sink;\n", net.start(), net.end()));
    for (i, p) in net.places().iter().enumerate() {
        for a in p.ingoing.iter() {
            out.push_str(&format!("  t{a} -> p{i};\n"));
        }
        for a in p.outgoing.iter() {
            out.push_str(&format!("  p{i} -> t{a};\n"));
        }
    }
    out.push_str("}\n");
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::EventLog;
    use crate::petri::Place;

    #[test]
    fn renders_shapes_and_balanced_braces() {
        let log = EventLog::from_traces([(vec!["say \"hi\""], 1)]).unwrap().augment_endpoints();
        let p = Place::from_names(&log, &["▶"], &["say \"hi\""]).unwrap();
        let net = PetriNet::new(log.all_activities(), [p], log.endpoints().unwrap());
        let dot = String::from_utf8(export_dot(&net, log.alphabet())).unwrap();
        assert!(dot.starts_with("digraph petrinet {"));
        assert_eq!(dot.matches("shape=box").count(), 3);
        assert!(dot.contains(r#"label="say \"hi\"""#));
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());
        assert_eq!(dot, String::from_utf8(export_dot(&net, log.alphabet())).unwrap());
    }
}
