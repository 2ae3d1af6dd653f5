use std::fmt;
use std::str::FromStr;

macro_rules! relations {
    ($($variant:ident => $symmetric:expr),* $(,)?) => {
        /// The closed set of relations an assertion may carry.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Relation {
            $($variant),*
        }

        impl Relation {
            pub const ALL: &'static [Relation] = &[$(Relation::$variant),*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Relation::$variant => stringify!($variant)),*
                }
            }

            /// Symmetric relations are stored with their endpoints in
            /// URI order; direction carries no meaning for them.
            pub fn is_symmetric(self) -> bool {
                match self {
                    $(Relation::$variant => $symmetric),*
                }
            }

            pub fn from_name(name: &str) -> Option<Relation> {
                match name {
                    $(stringify!($variant) => Some(Relation::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

relations! {
    Antonym => true,
    AtLocation => false,
    CapableOf => false,
    Causes => false,
    CausesDesire => false,
    CreatedBy => false,
    DefinedAs => false,
    DerivedFrom => false,
    Desires => false,
    DistinctFrom => true,
    Entails => false,
    EtymologicallyRelatedTo => true,
    ExternalURL => false,
    FormOf => false,
    HasA => false,
    HasContext => false,
    HasFirstSubevent => false,
    HasLastSubevent => false,
    HasPrerequisite => false,
    HasProperty => false,
    InstanceOf => false,
    IsA => false,
    LocatedNear => true,
    MadeOf => false,
    MannerOf => false,
    MotivatedByGoal => false,
    ObstructedBy => false,
    PartOf => false,
    ReceivesAction => false,
    RelatedTo => true,
    SenseOf => false,
    SimilarTo => true,
    SymbolOf => false,
    Synonym => true,
    UsedFor => false,
}

impl Relation {
    /// Parses either a bare name (`UsedFor`) or a relation URI (`/r/UsedFor`).
    pub fn parse(s: &str) -> Option<Relation> {
        Relation::from_name(s.strip_prefix("/r/").unwrap_or(s))
    }

    pub fn uri(self) -> String {
        format!("/r/{}", self.name())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/r/{}", self.name())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::parse(s).ok_or_else(|| s.to_owned())
    }
}
