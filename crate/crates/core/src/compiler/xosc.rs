//! OpenSCENARIO 1.0 emission and a structural validator for the emitted subset.

use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer, XmlVersion};

use super::assets::AssetEntry;
use super::placement::ScenePose;
use super::trajectory::Trajectory;
use super::weather::{clock_time, WeatherParams};
use super::CompileError;
use crate::scene::SceneDoc;

pub const COORDINATE_NOTE: &str =
    " Positions are world coordinates: x east, y north in metres; h in radians counter-clockwise from +x. ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlElement {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<XmlElement>,
}

impl XmlElement {
    fn new(name: &str) -> Self {
        XmlElement { name: name.to_string(), attrs: Vec::new(), children: Vec::new() }
    }

    fn attr(mut self, k: &str, v: impl Into<String>) -> Self {
        self.attrs.push((k.to_string(), v.into()));
        self
    }

    fn child(mut self, c: XmlElement) -> Self {
        self.children.push(c);
        self
    }

    fn children(mut self, cs: impl IntoIterator<Item = XmlElement>) -> Self {
        self.children.extend(cs);
        self
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.attrs.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str())
    }

    pub fn first(&self, name: &str) -> Option<&XmlElement> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a XmlElement> + 'a {
        self.children.iter().filter(move |c| c.name == name)
    }

    /// Every descendant (including self) with the given name, document order.
    pub fn descendants<'a>(&'a self, name: &str, out: &mut Vec<&'a XmlElement>) {
        if self.name == name {
            out.push(self);
        }
        for c in &self.children {
            c.descendants(name, out);
        }
    }

    fn path(&self, names: &[&str]) -> Option<&XmlElement> {
        names.iter().try_fold(self, |e, n| e.first(n))
    }

    fn write(&self, w: &mut Writer<Vec<u8>>) -> std::io::Result<()> {
        let start = BytesStart::new(self.name.as_str())
            .with_attributes(self.attrs.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        if self.children.is_empty() {
            w.write_event(Event::Empty(start))
        } else {
            w.write_event(Event::Start(start))?;
            for c in &self.children {
                c.write(w)?;
            }
            w.write_event(Event::End(BytesEnd::new(self.name.as_str())))
        }
    }
}

/// Emitted scenario: the element tree and its serialized text.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenScenarioDoc {
    pub root: XmlElement,
    pub xml: String,
}

fn num(v: f64, places: usize) -> String {
    let s = format!("{v:.places$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn world(x: f64, y: f64, h: f64) -> XmlElement {
    XmlElement::new("Position").child(
        XmlElement::new("WorldPosition")
            .attr("x", num(x, 3))
            .attr("y", num(y, 3))
            .attr("z", "0")
            .attr("h", num(h, 4)),
    )
}

fn sim_time_trigger(kind: &str, name: &str, value: f64, edge: &str) -> XmlElement {
    XmlElement::new(kind).child(
        XmlElement::new("ConditionGroup").child(
            XmlElement::new("Condition")
                .attr("name", name)
                .attr("delay", "0")
                .attr("conditionEdge", edge)
                .child(
                    XmlElement::new("ByValueCondition").child(
                        XmlElement::new("SimulationTimeCondition").attr("value", num(value, 1)).attr("rule", "greaterThan"),
                    ),
                ),
        ),
    )
}

fn entity(id: &str, asset: &AssetEntry) -> XmlElement {
    let bbox = XmlElement::new("BoundingBox")
        .child(XmlElement::new("Center").attr("x", "0").attr("y", "0").attr("z", num(asset.height / 2.0, 2)))
        .child(
            XmlElement::new("Dimensions")
                .attr("width", num(asset.width, 2))
                .attr("length", num(asset.length, 2))
                .attr("height", num(asset.height, 2)),
        );
    let mut props = XmlElement::new("Properties")
        .child(XmlElement::new("Property").attr("name", "actor_type").attr("value", asset.actor_type.as_str()));
    for (k, v) in &asset.attributes {
        props = props.child(XmlElement::new("Property").attr("name", k.as_str()).attr("value", v.as_str()));
    }
    let object = match asset.category.as_str() {
        "pedestrian" => XmlElement::new("Pedestrian")
            .attr("model", asset.asset.as_str())
            .attr("mass", "80")
            .attr("name", asset.asset.as_str())
            .attr("pedestrianCategory", "pedestrian")
            .child(XmlElement::new("ParameterDeclarations"))
            .child(bbox)
            .child(props),
        "obstacle" | "barrier" => XmlElement::new("MiscObject")
            .attr("miscObjectCategory", asset.category.as_str())
            .attr("mass", "10")
            .attr("name", asset.asset.as_str())
            .child(XmlElement::new("ParameterDeclarations"))
            .child(bbox)
            .child(props),
        category => {
            let axle = |name: &str, x: f64| {
                XmlElement::new(name)
                    .attr("maxSteering", "0.5")
                    .attr("wheelDiameter", "0.6")
                    .attr("trackWidth", num(asset.width * 0.85, 2))
                    .attr("positionX", num(x, 2))
                    .attr("positionZ", "0.3")
            };
            XmlElement::new("Vehicle")
                .attr("name", asset.asset.as_str())
                .attr("vehicleCategory", category)
                .child(XmlElement::new("ParameterDeclarations"))
                .child(bbox)
                .child(
                    XmlElement::new("Performance")
                        .attr("maxSpeed", "69.444")
                        .attr("maxAcceleration", "10")
                        .attr("maxDeceleration", "10"),
                )
                .child(
                    XmlElement::new("Axles")
                        .child(axle("FrontAxle", asset.length * 0.3))
                        .child(axle("RearAxle", 0.0)),
                )
                .child(props)
        }
    };
    XmlElement::new("ScenarioObject").attr("name", id).child(object)
}

fn environment(w: &WeatherParams, doc: &SceneDoc) -> XmlElement {
    let cloud = match w.cloudiness {
        c if c < 20.0 => "free",
        c if c < 50.0 => "cloudy",
        c if c < 90.0 => "overcast",
        _ => "rainy",
    };
    let precipitation = if w.precipitation <= 0.0 {
        "dry"
    } else if doc.environment.weather == crate::scene::Weather::Snow {
        "snow"
    } else {
        "rain"
    };
    let intensity = if w.sun_altitude > 0.0 { 1.0 } else { 0.0 };
    XmlElement::new("Environment")
        .attr("name", format!("{}_{}", doc.environment.weather, doc.environment.time))
        .child(
            XmlElement::new("TimeOfDay")
                .attr("animation", "false")
                .attr("dateTime", format!("2024-06-01T{}", clock_time(doc.environment.time))),
        )
        .child(
            XmlElement::new("Weather")
                .attr("cloudState", cloud)
                .child(
                    XmlElement::new("Sun")
                        .attr("intensity", num(intensity, 1))
                        .attr("azimuth", "0")
                        .attr("elevation", num(w.sun_altitude.to_radians(), 4)),
                )
                .child(XmlElement::new("Fog").attr("visualRange", num(w.visibility, 1)))
                .child(
                    XmlElement::new("Precipitation")
                        .attr("precipitationType", precipitation)
                        .attr("intensity", num(w.precipitation / 100.0, 2)),
                ),
        )
        .child(XmlElement::new("RoadCondition").attr("frictionScaleFactor", num(1.0 - 0.4 * w.wetness / 100.0, 2)))
}

fn maneuver_group(t: &Trajectory) -> XmlElement {
    let id = t.actor.as_str();
    let vertices = t
        .samples
        .iter()
        .map(|s| XmlElement::new("Vertex").attr("time", num(s.t, 2)).child(world(s.x, s.y, s.heading)));
    let follow = XmlElement::new("FollowTrajectoryAction")
        .child(
            XmlElement::new("Trajectory")
                .attr("name", format!("{id}_trajectory"))
                .attr("closed", "false")
                .child(XmlElement::new("ParameterDeclarations"))
                .child(XmlElement::new("Shape").child(XmlElement::new("Polyline").children(vertices))),
        )
        .child(
            XmlElement::new("TimeReference").child(
                XmlElement::new("Timing").attr("domainAbsoluteRelative", "absolute").attr("scale", "1").attr("offset", "0"),
            ),
        )
        .child(XmlElement::new("TrajectoryFollowingMode").attr("followingMode", "position"));
    XmlElement::new("ManeuverGroup")
        .attr("maximumExecutionCount", "1")
        .attr("name", format!("{id}_group"))
        .child(
            XmlElement::new("Actors")
                .attr("selectTriggeringEntities", "false")
                .child(XmlElement::new("EntityRef").attr("entityRef", id)),
        )
        .child(
            XmlElement::new("Maneuver").attr("name", format!("{id}_maneuver")).child(
                XmlElement::new("Event")
                    .attr("name", format!("{id}_event"))
                    .attr("priority", "overwrite")
                    .child(
                        XmlElement::new("Action").attr("name", format!("{id}_{}", strategy_name(t))).child(
                            XmlElement::new("PrivateAction").child(XmlElement::new("RoutingAction").child(follow)),
                        ),
                    )
                    .child(sim_time_trigger("StartTrigger", &format!("{id}_start"), 0.0, "none")),
            ),
        )
}

fn strategy_name(t: &Trajectory) -> String {
    serde_json::to_value(t.strategy).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Builds the scenario document. Pure: identical inputs give identical bytes.
pub fn emit_openscenario(
    doc: &SceneDoc,
    map_name: &str,
    assets: &BTreeMap<String, &AssetEntry>,
    poses: &[ScenePose],
    trajectories: &[Trajectory],
    weather: &WeatherParams,
) -> Result<OpenScenarioDoc, CompileError> {
    let ids: Vec<&str> = doc.actors.iter().map(|a| a.id.as_str()).collect();
    fn sorted(v: Vec<&str>) -> BTreeSet<&str> {
        v.into_iter().collect()
    }
    let want = sorted(ids.clone());
    for (what, got) in [
        ("poses", poses.iter().map(|p| p.actor.as_str()).collect::<Vec<_>>()),
        ("trajectories", trajectories.iter().map(|t| t.actor.as_str()).collect()),
        ("assets", assets.keys().map(String::as_str).collect()),
    ] {
        if got.len() != ids.len() || sorted(got) != want {
            return Err(CompileError::ActorMismatch(format!("{what} do not match the scene actors")));
        }
    }
    let pose: BTreeMap<&str, &ScenePose> = poses.iter().map(|p| (p.actor.as_str(), p)).collect();
    let traj: BTreeMap<&str, &Trajectory> = trajectories.iter().map(|t| (t.actor.as_str(), t)).collect();

    let privates = ids.iter().map(|id| {
        let p = pose[id];
        XmlElement::new("Private")
            .attr("entityRef", *id)
            .child(XmlElement::new("PrivateAction").child(XmlElement::new("TeleportAction").child(world(p.x, p.y, p.heading))))
            .child(
                XmlElement::new("PrivateAction").child(
                    XmlElement::new("LongitudinalAction").child(
                        XmlElement::new("SpeedAction")
                            .child(
                                XmlElement::new("SpeedActionDynamics")
                                    .attr("dynamicsShape", "step")
                                    .attr("value", "0")
                                    .attr("dynamicsDimension", "time"),
                            )
                            .child(
                                XmlElement::new("SpeedActionTarget")
                                    .child(XmlElement::new("AbsoluteTargetSpeed").attr("value", num(p.speed / 3.6, 3))),
                            ),
                    ),
                ),
            )
    });
    let horizon = trajectories.iter().filter_map(|t| t.samples.last()).map(|s| s.t).fold(0.0, f64::max);
    let description = format!(
        "{} {} on {}, {} actors",
        doc.environment.weather,
        doc.environment.time,
        doc.road_network.road_type,
        ids.len()
    );
    let root = XmlElement::new("OpenSCENARIO")
        .child(
            XmlElement::new("FileHeader")
                .attr("revMajor", "1")
                .attr("revMinor", "0")
                .attr("date", "2024-06-01T00:00:00")
                .attr("description", description)
                .attr("author", "rulescene"),
        )
        .child(XmlElement::new("ParameterDeclarations"))
        .child(XmlElement::new("CatalogLocations"))
        .child(XmlElement::new("RoadNetwork").child(XmlElement::new("LogicFile").attr("filepath", map_name)))
        .child(XmlElement::new("Entities").children(ids.iter().map(|id| entity(id, assets[*id]))))
        .child(
            XmlElement::new("Storyboard")
                .child(
                    XmlElement::new("Init").child(
                        XmlElement::new("Actions")
                            .child(
                                XmlElement::new("GlobalAction")
                                    .child(XmlElement::new("EnvironmentAction").child(environment(weather, doc))),
                            )
                            .children(privates),
                    ),
                )
                .child(
                    XmlElement::new("Story").attr("name", "scene").child(
                        XmlElement::new("Act")
                            .attr("name", "main")
                            .children(ids.iter().map(|id| maneuver_group(traj[id])))
                            .child(sim_time_trigger("StartTrigger", "act_start", 0.0, "none")),
                    ),
                )
                .child(sim_time_trigger("StopTrigger", "end", horizon, "rising")),
        );
    let xml = serialize(&root);
    Ok(OpenScenarioDoc { root, xml })
}

pub fn serialize(root: &XmlElement) -> String {
    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None))).unwrap();
    w.write_event(Event::Comment(BytesText::from_escaped(COORDINATE_NOTE))).unwrap();
    root.write(&mut w).unwrap();
    let mut out = String::from_utf8(w.into_inner()).expect("writer emits UTF-8");
    out.push('\n');
    out
}

/// Parses XML into an element tree (text content is ignored).
pub fn parse_xml(text: &str) -> Result<XmlElement, String> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<XmlElement> = vec![XmlElement::new("#document")];
    let element = |e: &BytesStart| -> Result<XmlElement, String> {
        let mut el = XmlElement::new(e.name().as_ref());
        for a in e.attributes() {
            let a = a.map_err(|e| e.to_string())?;
            let key = a.key.as_ref().to_string();
            let value = a.normalized_value(XmlVersion::Implicit1_0).map_err(|e| e.to_string())?.into_owned();
            el.attrs.push((key, value));
        }
        Ok(el)
    };
    loop {
        match reader.read_event().map_err(|e| format!("at byte {}: {e}", reader.buffer_position()))? {
            Event::Start(e) => stack.push(element(&e)?),
            Event::Empty(e) => {
                let el = element(&e)?;
                stack.last_mut().unwrap().children.push(el);
            }
            Event::End(_) => {
                let el = stack.pop().unwrap();
                stack.last_mut().ok_or("unbalanced end tag")?.children.push(el);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    let mut doc = stack.pop().ok_or("empty document")?;
    if !stack.is_empty() {
        return Err("unclosed element".into());
    }
    match doc.children.len() {
        1 => Ok(doc.children.remove(0)),
        n => Err(format!("expected one root element, found {n}")),
    }
}

/// What the validator learned about a well-formed scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub entities: Vec<String>,
    pub trajectory_actors: Vec<String>,
    pub vertices: usize,
}

/// Checks the structural subset this crate emits.
pub fn validate_openscenario(xml: &str) -> Result<ScenarioSummary, String> {
    let root = parse_xml(xml)?;
    if root.name != "OpenSCENARIO" {
        return Err(format!("root element is {}", root.name));
    }
    let header = root.first("FileHeader").ok_or("missing FileHeader")?;
    for a in ["revMajor", "revMinor", "date", "description", "author"] {
        header.get(a).ok_or_else(|| format!("FileHeader lacks {a}"))?;
    }
    root.path(&["RoadNetwork", "LogicFile"]).and_then(|l| l.get("filepath")).ok_or("missing RoadNetwork/LogicFile")?;
    let mut entities = Vec::new();
    for obj in root.first("Entities").ok_or("missing Entities")?.all("ScenarioObject") {
        let name = obj.get("name").ok_or("ScenarioObject without name")?;
        let kinds = obj.children.iter().filter(|c| ["Vehicle", "Pedestrian", "MiscObject"].contains(&c.name.as_str())).count();
        if kinds != 1 || obj.children.len() != 1 {
            return Err(format!("entity {name} must hold exactly one Vehicle, Pedestrian or MiscObject"));
        }
        if obj.children[0].first("BoundingBox").is_none() {
            return Err(format!("entity {name} has no BoundingBox"));
        }
        if entities.iter().any(|e| e == name) {
            return Err(format!("entity {name} declared twice"));
        }
        entities.push(name.to_string());
    }
    if entities.is_empty() {
        return Err("no entities".into());
    }
    let storyboard = root.first("Storyboard").ok_or("missing Storyboard")?;
    let actions = storyboard.path(&["Init", "Actions"]).ok_or("missing Init/Actions")?;
    let env = actions
        .path(&["GlobalAction", "EnvironmentAction", "Environment"])
        .ok_or("missing environment action")?;
    for part in ["TimeOfDay", "Weather", "RoadCondition"] {
        env.first(part).ok_or_else(|| format!("Environment lacks {part}"))?;
    }
    let mut teleported = BTreeSet::new();
    for p in actions.all("Private") {
        let r = p.get("entityRef").ok_or("Private without entityRef")?;
        if !entities.iter().any(|e| e == r) {
            return Err(format!("Private references unknown entity {r}"));
        }
        let has_teleport = p.all("PrivateAction").any(|a| a.path(&["TeleportAction", "Position", "WorldPosition"]).is_some());
        if !has_teleport || !teleported.insert(r.to_string()) {
            return Err(format!("entity {r} needs exactly one initial teleport"));
        }
    }
    if teleported.len() != entities.len() {
        return Err("every entity needs an initial position".into());
    }
    let mut groups = Vec::new();
    storyboard.descendants("ManeuverGroup", &mut groups);
    let mut trajectory_actors = Vec::new();
    let mut vertices = 0;
    for g in groups {
        let refs: Vec<&str> = g.first("Actors").map(|a| a.all("EntityRef").filter_map(|e| e.get("entityRef")).collect()).unwrap_or_default();
        let [actor] = refs.as_slice() else {
            return Err("each maneuver group must name exactly one actor".into());
        };
        if !entities.iter().any(|e| e == actor) {
            return Err(format!("maneuver group references unknown entity {actor}"));
        }
        let mut follows = Vec::new();
        g.descendants("FollowTrajectoryAction", &mut follows);
        for f in follows {
            let poly = f.path(&["Trajectory", "Shape", "Polyline"]).ok_or("trajectory without polyline")?;
            f.path(&["TimeReference", "Timing"]).ok_or("trajectory without timing")?;
            let times: Vec<f64> = poly
                .all("Vertex")
                .map(|v| {
                    v.path(&["Position", "WorldPosition"]).ok_or("vertex without world position")?;
                    v.get("time").and_then(|t| t.parse().ok()).ok_or("vertex without time")
                })
                .collect::<Result<_, _>>()?;
            if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(format!("trajectory of {actor} needs ≥ 2 vertices with increasing time"));
            }
            vertices += times.len();
            trajectory_actors.push(actor.to_string());
        }
    }
    if storyboard.first("StopTrigger").is_none() {
        return Err("missing StopTrigger".into());
    }
    Ok(ScenarioSummary { entities, trajectory_actors, vertices })
}
