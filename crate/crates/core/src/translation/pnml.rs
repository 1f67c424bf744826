use std::collections::HashMap;
use std::fmt::Write;

use super::petri::{Marking, NetArc, PetriNet, Transition};
use super::{xml_escape, TranslationError};

const NS: &str = "http://www.pnml.org/version-2009/grammar/pnml";
const NET_TYPE: &str = "http://www.pnml.org/version-2009/grammar/ptnet";

pub fn write_pnml(net: &PetriNet) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<pnml xmlns=\"{NS}\">");
    let _ = writeln!(s, "  <net id=\"net\" type=\"{NET_TYPE}\">");
    s.push_str("    <page id=\"page\">\n");
    for (p, id) in net.places.iter().enumerate() {
        match net.initial_marking.get(&p) {
            Some(k) => {
                let _ = writeln!(
                    s,
                    "      <place id=\"{}\"><initialMarking><text>{k}</text></initialMarking></place>",
                    xml_escape(id)
                );
            }
            None => {
                let _ = writeln!(s, "      <place id=\"{}\"/>", xml_escape(id));
            }
        }
    }
    for t in &net.transitions {
        match &t.label {
            Some(l) => {
                let _ = writeln!(
                    s,
                    "      <transition id=\"{}\"><name><text>{}</text></name></transition>",
                    xml_escape(&t.id),
                    xml_escape(l)
                );
            }
            None => {
                let _ = writeln!(s, "      <transition id=\"{}\"/>", xml_escape(&t.id));
            }
        }
    }
    for (k, a) in net.arcs.iter().enumerate() {
        let (src, dst) = match *a {
            NetArc::PlaceToTransition(p, t) => (&net.places[p], &net.transitions[t].id),
            NetArc::TransitionToPlace(t, p) => (&net.transitions[t].id, &net.places[p]),
        };
        let _ = writeln!(
            s,
            "      <arc id=\"a{k}\" source=\"{}\" target=\"{}\"/>",
            xml_escape(src),
            xml_escape(dst)
        );
    }
    s.push_str("    </page>\n    <finalmarkings>\n      <marking>\n");
    for (&p, k) in &net.final_marking {
        let _ = writeln!(
            s,
            "        <place idref=\"{}\"><text>{k}</text></place>",
            xml_escape(&net.places[p])
        );
    }
    s.push_str("      </marking>\n    </finalmarkings>\n  </net>\n</pnml>\n");
    s
}

fn bad(msg: impl Into<String>) -> TranslationError {
    TranslationError::Document(msg.into())
}

fn text_child<'a>(node: roxmltree::Node<'a, 'a>, tag: &str) -> Option<&'a str> {
    node.children()
        .find(|c| c.has_tag_name(tag))
        .and_then(|c| c.children().find(|c| c.has_tag_name("text")))
        .and_then(|t| t.text())
}

fn count(text: Option<&str>, what: &str) -> Result<u32, TranslationError> {
    text.unwrap_or("1").trim().parse().map_err(|_| bad(format!("bad token count in {what}")))
}

/// Reads a single-page place/transition net as written by [`write_pnml`].
pub fn read_pnml(doc: &str) -> Result<PetriNet, TranslationError> {
    let xml = roxmltree::Document::parse(doc).map_err(|e| bad(e.to_string()))?;
    let net_el = xml.descendants().find(|n| n.has_tag_name("net")).ok_or_else(|| bad("no <net> element"))?;
    let mut places = Vec::new();
    let mut transitions = Vec::new();
    let mut place_idx = HashMap::new();
    let mut trans_idx = HashMap::new();
    let mut initial_marking = Marking::new();
    for el in net_el.descendants() {
        let id = || el.attribute("id").map(str::to_string).ok_or_else(|| bad("element without id"));
        if el.has_tag_name("place") && el.parent().is_some_and(|p| p.has_tag_name("page")) {
            let id = id()?;
            place_idx.insert(id.clone(), places.len());
            if el.children().any(|c| c.has_tag_name("initialMarking")) {
                let k = count(text_child(el, "initialMarking"), &id)?;
                if k > 0 {
                    initial_marking.insert(places.len(), k);
                }
            }
            places.push(id);
        } else if el.has_tag_name("transition") {
            let id = id()?;
            trans_idx.insert(id.clone(), transitions.len());
            transitions.push(Transition { id, label: text_child(el, "name").map(str::to_string) });
        }
    }
    let mut arcs = Vec::new();
    for el in net_el.descendants().filter(|n| n.has_tag_name("arc")) {
        let src = el.attribute("source").ok_or_else(|| bad("arc without source"))?;
        let dst = el.attribute("target").ok_or_else(|| bad("arc without target"))?;
        if count(text_child(el, "inscription"), "arc inscription")? != 1 {
            return Err(bad("arc weights other than 1 are not supported"));
        }
        let arc = match (place_idx.get(src), trans_idx.get(dst), trans_idx.get(src), place_idx.get(dst)) {
            (Some(&p), Some(&t), _, _) => NetArc::PlaceToTransition(p, t),
            (_, _, Some(&t), Some(&p)) => NetArc::TransitionToPlace(t, p),
            _ => return Err(bad(format!("arc {src} -> {dst} does not join a place and a transition"))),
        };
        arcs.push(arc);
    }
    let mut final_marking = Marking::new();
    if let Some(m) = net_el.descendants().find(|n| n.has_tag_name("finalmarkings")) {
        for el in m.descendants().filter(|n| n.has_tag_name("place")) {
            let r = el.attribute("idref").ok_or_else(|| bad("final marking place without idref"))?;
            let &p = place_idx.get(r).ok_or_else(|| bad(format!("unknown place {r} in final marking")))?;
            let k = count(el.children().find(|c| c.has_tag_name("text")).and_then(|t| t.text()), r)?;
            if k > 0 {
                final_marking.insert(p, k);
            }
        }
    }
    Ok(PetriNet { places, transitions, arcs, initial_marking, final_marking })
}
