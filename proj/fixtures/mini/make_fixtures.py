#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Authors the mini fixture set: 21 relations x 5 subjects.

Writes input/truth/train rows, candidate search results, Wikipedia pages,
the IMDb snapshot, a Wikidata truth snapshot for the audit, and script.jsonl
(tag -> model reply). llm.jsonl is produced afterwards by

    llmke record-fixtures --provider scripted --script script.jsonl ...

QIDs of countries, chemical elements and a handful of well-known subjects
are real; everything else uses placeholder IDs in the Q90000000 range.
"""

import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
SEARCH_LIMIT = 10

REAL_QIDS = {
    # subjects
    "Barack Obama": "Q76", "Albert Einstein": "Q937", "Marie Curie": "Q7186", "Paris": "Q90",
    "London": "Q84", "Cairo": "Q85", "The Beatles": "Q1299", "water": "Q283",
    # countries
    "Brazil": "Q155", "Argentina": "Q414", "Paraguay": "Q733", "Uruguay": "Q77", "Bolivia": "Q750",
    "Peru": "Q419", "Colombia": "Q739", "Venezuela": "Q717", "Guyana": "Q734", "Suriname": "Q730",
    "France": "Q142", "Chile": "Q298", "Germany": "Q183", "Austria": "Q40", "Switzerland": "Q39",
    "Canada": "Q16", "Japan": "Q17", "Belgium": "Q31", "United Kingdom": "Q145", "Cyprus": "Q229",
    # elements
    "hydrogen": "Q556", "oxygen": "Q629", "nitrogen": "Q627", "carbon": "Q623", "sodium": "Q658",
    "chlorine": "Q688", "sulfur": "Q682", "mercury#element": "Q925", "mercury#planet": "Q308",
}

# Sense a correct answer refers to when every candidate is a named sense.
TRUE_SENSE = {"mercury": "mercury#element"}

_next_placeholder = [90000001]
_qids = {}


def qid(key):
    """Stable QID for an entity key (label, or label#sense for homonyms)."""
    if key in _qids:
        return _qids[key]
    if key in REAL_QIDS:
        _qids[key] = REAL_QIDS[key]
    else:
        _qids[key] = "Q%d" % _next_placeholder[0]
        _next_placeholder[0] += 1
    return _qids[key]


# label -> ranked candidate list [(entity key, description)]. Labels not
# listed get one candidate: the entity of the same name.
AMBIGUOUS = {
    "mercury": [("mercury#planet", "smallest and closest planet to the Sun in the Solar System"),
                ("mercury#element", "chemical element with symbol Hg and atomic number 80"),
                ("mercury#god", "Roman god of commerce and communication")],
    "George Harrison": [("George Harrison#politician", "British politician"),
                        ("George Harrison", "English musician, singer and songwriter")],
    "Roger Taylor": [("Roger Taylor#cricketer", "English cricketer"),
                     ("Roger Taylor", "English drummer and singer")],
    "Chris Martin": [("Chris Martin#athlete", "American football player"),
                     ("Chris Martin", "British singer and musician, lead vocalist of Coldplay")],
    "Thames": [("Thames#town", "town in the Waikato region of New Zealand"),
               ("River Thames", "river in southern England")],
    "Seine": [("Seine", "river in northern France"),
              ("Seine#department", "former department of France")],
    "Danube": [("Danube", "river in Central and Eastern Europe"),
               ("Danube#ship", "paddle steamer")],
    "Portuguese": [("Portuguese#people", "ethnic group native to Portugal"),
                   ("Portuguese", "Romance language of the Iberian Peninsula")],
    "French": [("French#people", "nationals of France"),
               ("French", "Romance language originating in France")],
    "German": [("German#people", "people of Germany"),
               ("German", "West Germanic language")],
    "English": [("English", "West Germanic language"),
                ("English#people", "nation and ethnic group native to England")],
    "Salzburg": [("Salzburg#city", "city in Austria"),
                 ("Salzburg", "state of Austria")],
    "Long Walk to Freedom": [("Long Walk to Freedom#song", "song by a South African choir"),
                             ("Long Walk to Freedom", "1994 autobiography by Nelson Mandela")],
    "Dreams from My Father": [("Dreams from My Father#film", "2012 documentary film"),
                              ("Dreams from My Father", "1995 memoir by Barack Obama")],
    "Pierre Curie": [("Pierre Curie", "French physicist"),
                     ("Pierre Curie#crater", "lunar impact crater")],
    "Yoko Ono": [("Yoko Ono", "Japanese artist and musician"),
                 ("Yoko Ono#album", "1970 album")],
    "Elsa Einstein": [("Elsa Einstein#character", "character in a 2017 television series"),
                      ("Elsa Einstein", "second wife of Albert Einstein")],
    "New York": [("New York City", "most populous city in the United States"),
                 ("New York", "state of the United States of America")],
    "Victoria": [("Victoria#queen", "Queen of the United Kingdom from 1837 to 1901"),
                 ("Victoria", "state of Australia")],
    "Georgia": [("Georgia#country", "country in the Caucasus"),
                ("Georgia", "state of the United States of America")],
    "Princeton": [("Princeton", "municipality in Mercer County, New Jersey"),
                  ("Princeton University", "private university in New Jersey")],
    "Michelle Obama": [("Michelle Obama", "First Lady of the United States from 2009 to 2017"),
                       ("Michelle Obama#book", "2018 biography")],
}

# Labels the search finds nothing for.
NO_CANDIDATES = {"assassination"}


def candidates_for(label):
    if label in NO_CANDIDATES:
        return []
    ranked = AMBIGUOUS.get(label, [(label, "")])
    out = []
    for key, description in ranked:
        out.append({"qid": qid(key), "label": key.split("#")[0], "description": description, "aliases": []})
    return out


def truth_qid(label):
    """QID a correct answer label should map to."""
    if label in TRUE_SENSE:
        return qid(TRUE_SENSE[label])
    for key, _ in AMBIGUOUS.get(label, []):
        if "#" not in key:
            return qid(key)
    return qid(label)


# Reply rendering. A reply is (style, labels).
def render_reply(style, labels):
    lit = json.dumps(labels if labels else [""], ensure_ascii=False)
    if style == "plain":
        return lit
    if style == "prose":
        return "Sure, here is the answer: %s. Let me know if you need anything else." % lit
    if style == "fence":
        return "```python\n%s\n```" % lit
    if style == "single":
        return "[" + ", ".join("'%s'" % label for label in labels) + "]" if labels else "['']"
    if style == "spaced":
        return "[ " + " ,  ".join('"  %s "' % label for label in labels) + " ]"
    if style == "lead":
        return "Answer:\n" + lit
    if style == "malformed":
        return "I am not certain about this one."
    if style == "number":
        return 'The answer is ["%s"]' % labels[0]
    raise ValueError(style)


def R(style, *labels):
    return (style, list(labels))


# relation -> list of subjects:
#   (subject, truth labels, question reply, context reply or None, triple reply or None)
S = "plain"
DATA = {
    "BandHasMember": [
        ("The Beatles", ["John Lennon", "Paul McCartney", "George Harrison", "Ringo Starr"],
         R("prose", "John Lennon", "Paul McCartney", "George Harrison", "Ringo Starr"), None, None),
        ("Queen", ["Freddie Mercury", "Brian May", "Roger Taylor", "John Deacon"],
         R(S, "Freddie Mercury", "Brian May", "Roger Taylor", "John Deacon"), None, None),
        ("ABBA", ["Agnetha Fältskog", "Björn Ulvaeus", "Benny Andersson", "Anni-Frid Lyngstad"],
         R("fence", "Agnetha Fältskog", "Björn Ulvaeus", "Benny Andersson", "Anni-Frid Lyngstad"), None, None),
        ("Radiohead", ["Thom Yorke", "Jonny Greenwood", "Colin Greenwood", "Ed O'Brien", "Philip Selway"],
         R(S, "Thom Yorke", "Jonny Greenwood", "Colin Greenwood", "Ed O'Brien"),
         R(S, "Thom Yorke", "Jonny Greenwood", "Colin Greenwood", "Ed O'Brien", "Philip Selway"), None),
        ("Coldplay", ["Chris Martin", "Jonny Buckland", "Guy Berryman", "Will Champion"],
         R(S, "Chris Martin", "Jonny Buckland", "Guy Berryman", "Will Champion"), None, None),
    ],
    "CityLocatedAtRiver": [
        ("Paris", ["Seine"], R(S, "Seine"), None, None),
        ("London", ["River Thames"], R(S, "Thames"), None, R("single", "Thames")),
        ("Cairo", ["Nile"], R("lead", "Nile"), None, None),
        ("Vienna", ["Danube"], R(S, "Danube", "Wien River"), R(S, "Danube"), None),
        ("Budapest", ["Danube"], R(S, "Danube"), None, None),
    ],
    "CompanyHasParentOrganisation": [
        ("Instagram", ["Meta Platforms"], R(S, "Meta Platforms"), None, R(S, "Facebook")),
        ("YouTube", ["Google"], R(S, "Google"), None, None),
        ("Apple Inc.", [], R(S), None, None),
        ("Mojang Studios", ["Xbox Game Studios"], R(S, "Microsoft"), R(S, "Xbox Game Studios"), None),
        ("Toyota", [], R(S, "Toyota Group"), R(S), None),
    ],
    "CompoundHasParts": [
        ("water", ["hydrogen", "oxygen"], R(S, "hydrogen", "oxygen"), None, None),
        ("mercury(II) chloride", ["mercury", "chlorine"], R(S, "mercury", "chlorine"), None, None),
        ("ammonia", ["nitrogen", "hydrogen"], R("single", "nitrogen", "hydrogen"), None, None),
        ("sodium chloride", ["sodium", "chlorine"], R("fence", "sodium", "chlorine"), None, None),
        ("mercury(II) sulfide", ["mercury", "sulfur"], R(S, "mercury", "sulfur"), None,
         R("prose", "mercury", "sulfur")),
    ],
    "CountryBordersCountry": [
        ("Brazil", ["Argentina", "Bolivia", "Colombia", "France", "Guyana", "Paraguay", "Peru", "Suriname",
                    "Uruguay", "Venezuela"],
         R(S, "Argentina", "Bolivia", "Colombia", "Guyana", "Paraguay", "Peru", "Suriname", "Uruguay",
           "Venezuela"),
         R(S, "Argentina", "Bolivia", "Colombia", "France", "Guyana", "Paraguay", "Peru", "Suriname",
           "Uruguay", "Venezuela"), None),
        ("Argentina", ["Bolivia", "Brazil", "Chile", "Paraguay", "Uruguay"],
         R(S, "Bolivia", "Brazil", "Chile", "Paraguay", "Uruguay"), None, None),
        ("Paraguay", ["Argentina", "Bolivia", "Brazil"], R("spaced", "Argentina", "Bolivia", "Brazil"), None, None),
        ("Uruguay", ["Argentina", "Brazil"], R(S, "Argentina", "Brazil"), None, None),
        ("Bolivia", ["Argentina", "Brazil", "Chile", "Paraguay", "Peru"],
         R(S, "Argentina", "Brazil", "Chile", "Paraguay", "Peru"), None, None),
    ],
    "CountryHasOfficialLanguage": [
        ("Brazil", ["Portuguese"], R(S, "Portuguese"), None, None),
        ("France", ["French"], R(S, "French"), None, None),
        ("Switzerland", ["German", "French", "Italian", "Romansh"],
         R(S, "German", "French", "Italian"), R(S, "German", "French", "Italian", "Romansh"), None),
        ("Canada", ["English", "French"], R(S, "English", "French"), None, None),
        ("Japan", ["Japanese"], R(S, "Japanese"), None, None),
    ],
    "CountryHasStates": [
        ("Austria", ["Burgenland", "Carinthia", "Lower Austria", "Upper Austria", "Salzburg", "Styria", "Tyrol",
                     "Vorarlberg", "Vienna"],
         R(S, "Burgenland", "Carinthia", "Lower Austria", "Upper Austria", "Salzburg", "Styria", "Tyrol",
           "Vorarlberg"),
         R(S, "Burgenland", "Carinthia", "Lower Austria", "Upper Austria", "Salzburg", "Styria", "Tyrol",
           "Vorarlberg", "Vienna"), None),
        ("Belgium", ["Flemish Region", "Walloon Region", "Brussels-Capital Region"],
         R(S, "Flanders", "Wallonia", "Brussels"),
         R(S, "Flemish Region", "Walloon Region", "Brussels-Capital Region"), None),
        ("Bosnia and Herzegovina", ["Federation of Bosnia and Herzegovina", "Republika Srpska", "Brčko District"],
         R(S, "Federation of Bosnia and Herzegovina", "Republika Srpska", "Brčko District"), None, None),
        ("United Kingdom", ["England", "Scotland", "Wales", "Northern Ireland"],
         R(S, "England", "Scotland", "Wales", "Northern Ireland"), None, None),
        ("Cyprus", ["Nicosia District", "Limassol District", "Larnaca District", "Paphos District",
                    "Famagusta District", "Kyrenia District"],
         R(S, "Nicosia", "Limassol", "Larnaca", "Paphos", "Famagusta", "Kyrenia"),
         R(S, "Nicosia District", "Limassol District", "Larnaca District", "Paphos District",
           "Famagusta District", "Kyrenia District"), None),
    ],
    "FootballerPlaysPosition": [
        ("Lionel Messi", ["forward"], R(S, "forward"), None, None),
        ("Manuel Neuer", ["goalkeeper"], R(S, "goalkeeper"), None, None),
        ("Sergio Ramos", ["defender"], R(S, "defender"), None, None),
        ("Luka Modrić", ["midfielder"], R(S, "midfielder"), None, None),
        ("Virgil van Dijk", ["defender"], R(S, "centre-back"), R(S, "defender"), None),
    ],
    "PersonCauseOfDeath": [
        ("Marie Curie", ["aplastic anemia"], R(S, "aplastic anemia"), None, R(S, "leukemia")),
        ("Albert Einstein", ["abdominal aortic aneurysm"], R(S, "abdominal aortic aneurysm"), None, None),
        ("Barack Obama", [], R(S), None, None),
        ("John F. Kennedy", ["ballistic trauma"], R(S, "assassination"), R(S, "ballistic trauma"), None),
        ("Serena Williams", [], R("prose"), None, None),
    ],
    "PersonHasAutobiography": [
        ("Nelson Mandela", ["Long Walk to Freedom"], R(S, "Long Walk to Freedom"), None, None),
        ("Malcolm X", ["The Autobiography of Malcolm X"], R(S, "The Autobiography of Malcolm X"), None, None),
        ("Benjamin Franklin", ["The Autobiography of Benjamin Franklin"],
         R(S, "The Autobiography of Benjamin Franklin"), None, None),
        ("Mahatma Gandhi", ["The Story of My Experiments with Truth"],
         R(S, "The Story of My Experiments with Truth"), None, None),
        ("Barack Obama", ["Dreams from My Father"], R(S, "Dreams from My Father", "A Promised Land"),
         None, None),
    ],
    "PersonHasEmployer": [
        ("Tim Cook", ["Apple Inc."], R(S, "Apple Inc."), None, None),
        ("Sundar Pichai", ["Google"], R(S, "Google"), None, None),
        ("Marie Curie", ["University of Paris"], R(S, "University of Paris"), None, None),
        ("Albert Einstein", ["Institute for Advanced Study", "ETH Zurich", "Charles University"],
         R(S, "Institute for Advanced Study", "Princeton University"),
         R(S, "Institute for Advanced Study", "ETH Zurich", "Charles University"), None),
        ("Satya Nadella", ["Microsoft"], R(S, "Microsoft"), None, None),
    ],
    "PersonHasNobelPrize": [
        ("Marie Curie", ["Nobel Prize in Physics", "Nobel Prize in Chemistry"],
         R(S, "Nobel Prize in Physics", "Nobel Prize in Chemistry"), None, None),
        ("Albert Einstein", ["Nobel Prize in Physics"], R(S, "Nobel Prize in Physics"), None, None),
        ("Barack Obama", ["Nobel Peace Prize"], R(S, "Nobel Peace Prize"), None, None),
        ("Taylor Swift", [], R(S), None, None),
        ("Bob Dylan", ["Nobel Prize in Literature"], R(S, "Nobel Prize in Literature"), None, None),
    ],
    "PersonHasNumberOfChildren": [
        ("Barack Obama", ["2"], R(S, "2"), None, None),
        ("Albert Einstein", ["3"], R("number", "3"), None, None),
        ("Marie Curie", ["2"], R(S, "two (2)"), None, None),
        ("Charles Darwin", ["10"], R(S, "10"), None, None),
        ("Johann Sebastian Bach", ["20"], R(S, "19"), R(S, "20"), None),
    ],
    "PersonHasPlaceOfDeath": [
        ("Marie Curie", ["Passy"], R(S, "Passy"), None, None),
        ("Albert Einstein", ["Princeton"], R(S, "Princeton"), None, None),
        ("Barack Obama", [], R(S), None, None),
        ("Taylor Swift", [], R("malformed"), R(S), None),
        ("Freddie Mercury", ["Kensington"], R(S, "London"), R(S, "Kensington"), None),
    ],
    "PersonHasProfession": [
        ("Barack Obama", ["politician", "lawyer"], R(S, "politician", "lawyer"), None, None),
        ("Marie Curie", ["physicist", "chemist"], R(S, "physicist", "chemist"), None, None),
        ("Taylor Swift", ["singer-songwriter"], R(S, "singer", "songwriter"), R(S, "singer-songwriter"), None),
        ("Albert Einstein", ["physicist"], R(S, "physicist"), None, None),
        ("Leonardo da Vinci", ["painter", "engineer", "scientist"],
         R(S, "painter", "engineer", "scientist", "architect"), None, None),
    ],
    "PersonHasSpouse": [
        ("Barack Obama", ["Michelle Obama"], R(S, "Michelle Obama"), None, None),
        ("Marie Curie", ["Pierre Curie"], R(S, "Pierre Curie"), None, None),
        ("Albert Einstein", ["Mileva Marić", "Elsa Einstein"], R(S, "Mileva Marić", "Elsa Einstein"), None, None),
        ("John Lennon", ["Cynthia Lennon", "Yoko Ono"], R(S, "Cynthia Lennon", "Yoko Ono"), None, None),
        ("Taylor Swift", [], R(S), None, None),
    ],
    "PersonPlaysInstrument": [
        ("Jimi Hendrix", ["guitar"], R(S, "guitar"), None, None),
        ("Ringo Starr", ["drum kit"], R(S, "drums"), R(S, "drum kit"), None),
        ("Yo-Yo Ma", ["cello"], R(S, "cello"), None, None),
        ("Paul McCartney", ["bass guitar", "piano", "guitar"], R(S, "bass guitar", "piano", "guitar"), None, None),
        ("Lang Lang", ["piano"], R(S, "piano"), None, None),
    ],
    "PersonSpeaksLanguage": [
        ("Barack Obama", ["English"], R(S, "English"), None, None),
        ("Marie Curie", ["Polish", "French"], R(S, "Polish", "French"), None, None),
        ("Albert Einstein", ["German", "English"], R(S, "German", "English"), None, None),
        ("Pope Francis", ["Spanish", "Italian", "Latin"], R(S, "Spanish", "Italian", "Latin", "German"), None, None),
        ("Shakira", ["Spanish", "English", "Portuguese"], R(S, "Spanish", "English", "Portuguese"), None, None),
    ],
    "RiverBasinsCountry": [
        ("Danube", ["Germany", "Austria", "Slovakia", "Hungary", "Croatia", "Serbia", "Romania", "Bulgaria",
                    "Moldova", "Ukraine"],
         R(S, "Germany", "Austria", "Slovakia", "Hungary", "Serbia", "Romania", "Bulgaria"), None, None),
        ("Nile", ["Egypt", "Sudan", "South Sudan", "Uganda", "Ethiopia"],
         R(S, "Egypt", "Sudan", "South Sudan", "Uganda", "Ethiopia"), None, None),
        ("Rhine", ["Switzerland", "Germany", "France", "Netherlands", "Austria", "Liechtenstein"],
         R(S, "Switzerland", "Germany", "France", "Netherlands"),
         R(S, "Switzerland", "Germany", "France", "Netherlands", "Austria", "Liechtenstein"), None),
        ("Seine", ["France"], R(S, "France"), None, None),
        ("Thames", ["United Kingdom"], R(S, "England"), R(S, "United Kingdom"), None),
    ],
    "SeriesHasNumberOfEpisodes": [
        ("Breaking Bad", ["62"], R(S, "62"), None, None),
        ("Friends", ["236"], R(S, "236 episodes"), None, None),
        ("The Office", ["201"], R(S, "188"), R(S, "201"), None),
        ("Game of Thrones", ["73"], R(S, "73"), None, None),
        ("Sherlock", ["13"], R(S, "12"), R(S, "13"), R(S, "1,3")),
    ],
    "StateBordersState": [
        ("Bavaria", ["Baden-Württemberg", "Hesse", "Thuringia", "Saxony"],
         R(S, "Baden-Württemberg", "Hesse", "Thuringia", "Saxony"), None, None),
        ("Nevada", ["California", "Oregon", "Idaho", "Utah", "Arizona"],
         R(S, "California", "Oregon", "Idaho", "Utah", "Arizona"), None, None),
        ("Vermont", ["New York", "New Hampshire", "Massachusetts"],
         R(S, "New York", "New Hampshire", "Massachusetts"), None, None),
        ("Alabama", ["Florida", "Georgia", "Tennessee", "Mississippi"],
         R(S, "Florida", "Georgia", "Tennessee", "Mississippi"), None, None),
        ("Tasmania", [], R(S, "Victoria"), R(S), None),
    ],
}

NUMERIC = {"PersonHasNumberOfChildren", "SeriesHasNumberOfEpisodes"}
LM_RELATIONS = {"CityLocatedAtRiver", "CountryHasStates", "PersonHasSpouse", "StateBordersState"}

# LM disambiguation replies that deviate from a clean "Qnnn".
#   (subject, relation, label) -> [attempt 1 reply, attempt 2 reply]
LM_SPECIAL = {
    ("Paris", "CityLocatedAtRiver", "Seine"): ["It is the river, of course.", "The river flowing through Paris."],
    ("Albert Einstein", "PersonHasSpouse", "Elsa Einstein"): ["She was his second wife.", None],
}

# Train split: relation -> [(subject, answers)]. Subjects differ from the test rows.
TRAIN = {
    "BandHasMember": [("The Police", ["Sting", "Andy Summers", "Stewart Copeland"]),
                      ("Pink Floyd", ["Roger Waters", "David Gilmour", "Nick Mason", "Richard Wright"]),
                      ("U2", ["Bono", "The Edge", "Adam Clayton", "Larry Mullen Jr."])],
    "CityLocatedAtRiver": [("Rome", ["Tiber"]), ("Prague", ["Vltava"]), ("Cologne", ["Rhine"])],
    "CompanyHasParentOrganisation": [("WhatsApp", ["Meta Platforms"]), ("Pixar", ["The Walt Disney Company"]),
                                     ("Samsung", []), ("LinkedIn", ["Microsoft"])],
    "CompoundHasParts": [("methane", ["carbon", "hydrogen"]), ("carbon dioxide", ["carbon", "oxygen"]),
                         ("hydrogen chloride", ["hydrogen", "chlorine"])],
    "CountryBordersCountry": [("Chile", ["Argentina", "Bolivia", "Peru"]), ("Spain", ["France", "Portugal", "Andorra"]),
                              ("Peru", ["Ecuador", "Colombia", "Brazil", "Bolivia", "Chile"])],
    "CountryHasOfficialLanguage": [("Germany", ["German"]), ("Belgium", ["Dutch", "French", "German"]),
                                   ("Ireland", ["Irish", "English"])],
    "CountryHasStates": [("Germany", ["Bavaria", "Berlin", "Hesse", "Saxony"]),
                         ("Australia", ["New South Wales", "Queensland", "Victoria", "Tasmania"]),
                         ("Malta", ["Gozo Region", "Northern Region", "Southern Region"])],
    "FootballerPlaysPosition": [("Cristiano Ronaldo", ["forward"]), ("Gianluigi Buffon", ["goalkeeper"]),
                                ("Andrés Iniesta", ["midfielder"])],
    "PersonCauseOfDeath": [("Steve Jobs", ["pancreatic cancer"]), ("Bill Gates", []),
                           ("Whitney Houston", ["drowning"]), ("Abraham Lincoln", ["ballistic trauma"])],
    "PersonHasAutobiography": [("Charles Darwin", ["The Autobiography of Charles Darwin"]),
                               ("Agatha Christie", ["An Autobiography"]),
                               ("Mark Twain", ["Autobiography of Mark Twain"])],
    "PersonHasEmployer": [("Steve Jobs", ["Apple Inc."]), ("Richard Feynman", ["California Institute of Technology"]),
                          ("Jane Goodall", ["University of Cambridge"])],
    "PersonHasNobelPrize": [("Niels Bohr", ["Nobel Prize in Physics"]), ("Toni Morrison", ["Nobel Prize in Literature"]),
                            ("Elon Musk", []), ("Malala Yousafzai", ["Nobel Peace Prize"])],
    "PersonHasNumberOfChildren": [("Abraham Lincoln", ["4"]), ("Queen Victoria", ["9"]), ("Isaac Newton", ["0"])],
    "PersonHasPlaceOfDeath": [("Isaac Newton", ["Kensington"]), ("Serena Williams", []),
                              ("Ludwig van Beethoven", ["Vienna"]), ("Pablo Picasso", ["Mougins"])],
    "PersonHasProfession": [("Isaac Newton", ["physicist", "mathematician"]), ("Frida Kahlo", ["painter"]),
                            ("Ada Lovelace", ["mathematician"])],
    "PersonHasSpouse": [("Pierre Curie", ["Marie Curie"]), ("Frida Kahlo", ["Diego Rivera"]),
                        ("Isaac Newton", [])],
    "PersonPlaysInstrument": [("Eric Clapton", ["guitar"]), ("Miles Davis", ["trumpet"]),
                              ("Elton John", ["piano"])],
    "PersonSpeaksLanguage": [("Angela Merkel", ["German", "English", "Russian"]), ("Emmanuel Macron", ["French", "English"]),
                             ("Dalai Lama", ["Tibetan", "English"])],
    "RiverBasinsCountry": [("Amazon", ["Brazil", "Peru", "Colombia"]), ("Elbe", ["Germany", "Czech Republic"]),
                           ("Loire", ["France"])],
    "SeriesHasNumberOfEpisodes": [("The Wire", ["60"]), ("Seinfeld", ["180"]), ("Chernobyl", ["5"])],
    "StateBordersState": [("Texas", ["New Mexico", "Oklahoma", "Arkansas", "Louisiana"]),
                          ("Saxony", ["Bavaria", "Thuringia", "Saxony-Anhalt", "Brandenburg"]),
                          ("Hawaii", [])],
}

# Subject descriptions for page intros.
KIND = {
    "CityLocatedAtRiver": "a city", "CountryBordersCountry": "a country", "CountryHasOfficialLanguage": "a country",
    "CountryHasStates": "a country", "CompoundHasParts": "a chemical compound", "BandHasMember": "a band",
    "CompanyHasParentOrganisation": "a company", "RiverBasinsCountry": "a river",
    "SeriesHasNumberOfEpisodes": "a television series", "StateBordersState": "a federated state",
    "FootballerPlaysPosition": "a professional footballer",
}

# Facts as they appear in intros and Infoboxes: relation -> (intro phrase, infobox key).
FACT = {
    "BandHasMember": ("Its members are", "members"),
    "CityLocatedAtRiver": ("It lies on the", "river"),
    "CompanyHasParentOrganisation": ("It is owned by", "parent"),
    "CompoundHasParts": ("It is composed of", "elements"),
    "CountryBordersCountry": ("It shares land borders with", "borders"),
    "CountryHasOfficialLanguage": ("Its official languages are", "official_languages"),
    "CountryHasStates": ("It is divided into", "subdivision_type"),
    "FootballerPlaysPosition": ("He plays as a", "position"),
    "PersonCauseOfDeath": ("The cause of death was", "death_cause"),
    "PersonHasAutobiography": ("The autobiography is titled", "notable_works"),
    "PersonHasEmployer": ("Employers include", "employer"),
    "PersonHasNobelPrize": ("Awards include the", "awards"),
    "PersonHasNumberOfChildren": ("Number of children:", "children"),
    "PersonHasPlaceOfDeath": ("Died in", "death_place"),
    "PersonHasProfession": ("Occupations:", "occupation"),
    "PersonHasSpouse": ("Spouses:", "spouse"),
    "PersonPlaysInstrument": ("Instruments:", "instruments"),
    "PersonSpeaksLanguage": ("Languages spoken:", "languages"),
    "RiverBasinsCountry": ("Its basin spans", "basin_countries"),
    "SeriesHasNumberOfEpisodes": ("Episodes aired:", "num_episodes"),
    "StateBordersState": ("It borders", "borders"),
}

# Subjects without a page under their own title: label -> search hit (None: nothing found).
PAGE_REDIRECTS = {"mercury(II) chloride": "Mercury(II) chloride", "mercury(II) sulfide": None}
IMDB = {"Breaking Bad": 62, "Friends": 236, "The Office": 201, "Game of Thrones": 73, "Sherlock": 13}
ADMIN_DIVISION_SEARCH = {"United Kingdom": "Countries of the United Kingdom"}

# Rows where current Wikidata differs from the challenge truth.
WIKIDATA_DRIFT = {
    ("Cyprus", "CountryHasStates"): [],
    ("Lang Lang", "PersonPlaysInstrument"): [],
    ("Radiohead", "BandHasMember"): ["Thom Yorke", "Jonny Greenwood", "Colin Greenwood", "Ed O'Brien"],
}


def object_ids(relation, labels):
    if relation in NUMERIC:
        return list(labels)
    return [truth_qid(label) for label in labels]


def challenge_row(subject, relation, labels):
    row = {"SubjectEntity": subject, "SubjectEntityID": qid(subject), "Relation": relation}
    row["ObjectEntities"] = labels if labels else [""]
    row["ObjectEntitiesID"] = object_ids(relation, labels) if labels else [""]
    return row


def wikilinks(labels):
    return ", ".join("[[%s]]" % label for label in labels)


def build_pages():
    facts = {}
    for relation, rows in DATA.items():
        for subject, truth, *_ in rows:
            facts.setdefault(subject, []).append((relation, truth))

    pages = []
    for subject in sorted(facts):
        kinds = [KIND[r] for r, _ in facts[subject] if r in KIND]
        kind = kinds[0] if kinds else "a notable person"
        sentences = ["%s is %s." % (subject, kind)]
        fields = ["| name = %s" % subject]
        for index, (relation, truth) in enumerate(facts[subject]):
            phrase, key = FACT[relation]
            if truth:
                sentences.append("%s %s." % (phrase, ", ".join(truth)))
                if index % 2 == 0:
                    value = "{{plainlist|\n* %s\n}}" % "\n* ".join("[[%s]]" % t for t in truth)
                else:
                    value = wikilinks(truth) + "<ref>{{cite web |title=Source |url=https://example.org}}</ref>"
                fields.append("| %s = %s" % (key, value))
        wikitext = "{{Short description|%s}}\n{{Infobox %s\n%s\n}}\n'''%s''' is %s." % (
            kind, kind.split()[-1], "\n".join(fields), subject, kind)
        page_title = subject
        if subject in PAGE_REDIRECTS:
            pages.append({"source": "wikipedia", "title": subject, "found": False, "resolved_title": "",
                          "intro": "", "wikitext": ""})
            hit = PAGE_REDIRECTS[subject]
            pages.append({"source": "wikipedia-search", "title": subject, "result": hit})
            if hit is None:
                continue
            page_title = hit
        pages.append({"source": "wikipedia", "title": page_title, "found": True, "resolved_title": page_title,
                      "intro": " ".join(sentences), "wikitext": wikitext})

    for subject, truth, *_ in DATA["CountryHasStates"]:
        title = "Administrative Division of " + subject
        intro = "The first-level administrative divisions of %s are %s." % (subject, ", ".join(truth))
        if subject in ADMIN_DIVISION_SEARCH:
            hit = ADMIN_DIVISION_SEARCH[subject]
            pages.append({"source": "wikipedia", "title": title, "found": False, "resolved_title": "",
                          "intro": "", "wikitext": ""})
            pages.append({"source": "wikipedia-search", "title": title, "result": hit})
            title = hit
        pages.append({"source": "wikipedia", "title": title, "found": True, "resolved_title": title,
                      "intro": intro, "wikitext": ""})
    pages.sort(key=lambda p: (p["source"], p["title"]))
    return pages


def main():
    inputs, truth_rows, script, candidates, drift = [], [], {}, {}, []
    lm_labels = []

    for relation, rows in DATA.items():
        for subject, truth, question, context, triple in rows:
            inputs.append({"SubjectEntity": subject, "SubjectEntityID": qid(subject), "Relation": relation})
            truth_rows.append(challenge_row(subject, relation, truth))
            replies = {"question": question, "triple": triple or question, "context": context or question}
            for setting, (style, labels) in replies.items():
                script["%s|%s|%s" % (setting, qid(subject), relation)] = render_reply(style, labels)
                if relation in NUMERIC or style == "malformed":
                    continue
                for label in labels:
                    candidates[label] = candidates_for(label)
                    if relation in LM_RELATIONS:
                        lm_labels.append((subject, relation, label))
            wikidata = WIKIDATA_DRIFT.get((subject, relation), truth)
            drift.append({"subject_qid": qid(subject), "relation": relation,
                          "ids": sorted(object_ids(relation, wikidata)), "fetched_at": "2026-10-01T00:00:00Z"})

    for subject, relation, label in lm_labels:
        options = candidates[label]
        if len(options) <= 1:
            continue
        base = "disambiguate|%s|%s|%s|" % (qid(subject), relation, label)
        special = LM_SPECIAL.get((subject, relation, label))
        expected = truth_qid(label)
        if special:
            script[base + "1"] = special[0]
            script[base + "2"] = special[1] if special[1] is not None else "%s" % expected
        else:
            script[base + "1"] = expected if len(label) % 2 else "The intended entity is %s." % expected

    train = []
    for relation, rows in TRAIN.items():
        for subject, answers in rows:
            train.append(challenge_row(subject, relation, answers))

    def dump(name, rows):
        with open(HERE / name, "w", encoding="utf-8") as out:
            for row in rows:
                out.write(json.dumps(row, ensure_ascii=False) + "\n")

    dump("input.jsonl", inputs)
    dump("truth.jsonl", truth_rows)
    dump("train.jsonl", train)
    dump("candidates.jsonl", [{"label": label, "limit": SEARCH_LIMIT, "candidates": candidates[label]}
                              for label in sorted(candidates)])
    dump("pages.jsonl", build_pages())
    dump("imdb.jsonl", [{"subject_qid": qid(s), "episode_count": n} for s, n in sorted(IMDB.items())])
    dump("wikidata_truth.jsonl", drift)
    dump("script.jsonl", [{"tag": tag, "reply": script[tag]} for tag in sorted(script)])


if __name__ == "__main__":
    main()
