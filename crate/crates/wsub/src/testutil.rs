//! Shared test fixture: a small researcher graph with qualified statements.

use crate::wgraph::{DataValue, EntityId, Statement, Value, WikibaseGraph};

pub fn tim_bl() -> EntityId {
    EntityId::item(80)
}
pub fn vint_cerf() -> EntityId {
    EntityId::item(92743)
}
pub fn london() -> EntityId {
    EntityId::item(84)
}
pub fn cern() -> EntityId {
    EntityId::item(42944)
}
pub fn uk() -> EntityId {
    EntityId::item(145)
}
pub fn spain() -> EntityId {
    EntityId::item(29)
}
pub fn pa_award() -> EntityId {
    EntityId::item(185331)
}
pub fn human() -> EntityId {
    EntityId::item(5)
}
pub fn new_haven() -> EntityId {
    EntityId::item(49145)
}

pub fn instance_of() -> EntityId {
    EntityId::property(31)
}
pub fn birth_date() -> EntityId {
    EntityId::property(569)
}
pub fn birth_place() -> EntityId {
    EntityId::property(19)
}
pub fn country() -> EntityId {
    EntityId::property(17)
}
pub fn employer() -> EntityId {
    EntityId::property(108)
}
pub fn awarded() -> EntityId {
    EntityId::property(166)
}
pub fn q_start() -> EntityId {
    EntityId::property(580)
}
pub fn q_end() -> EntityId {
    EntityId::property(582)
}
pub fn point_time() -> EntityId {
    EntityId::property(585)
}
pub fn together_with() -> EntityId {
    EntityId::property(1706)
}

pub fn year(y: i64) -> Value {
    Value::Data(DataValue::year(y))
}

/// The eleven statements of the researcher fixture.
pub fn example_statements() -> Vec<Statement> {
    vec![
        Statement::new(tim_bl(), instance_of(), human()),
        Statement::new(tim_bl(), birth_date(), year(1955)),
        Statement::new(tim_bl(), birth_place(), london()),
        Statement::with_qualifiers(
            tim_bl(),
            employer(),
            cern(),
            [(q_start(), year(1980)), (q_end(), year(1980))],
        ),
        Statement::with_qualifiers(
            tim_bl(),
            employer(),
            cern(),
            [(q_start(), year(1984)), (q_end(), year(1994))],
        ),
        Statement::with_qualifiers(
            tim_bl(),
            awarded(),
            pa_award(),
            [
                (point_time(), year(2002)),
                (together_with(), Value::Entity(vint_cerf())),
            ],
        ),
        Statement::new(london(), country(), uk()),
        Statement::new(vint_cerf(), instance_of(), human()),
        Statement::new(vint_cerf(), birth_place(), new_haven()),
        Statement::with_qualifiers(cern(), awarded(), pa_award(), [(point_time(), year(2013))]),
        Statement::new(pa_award(), country(), spain()),
    ]
}

pub fn example_graph() -> WikibaseGraph {
    WikibaseGraph::from_statements(example_statements())
}
