#!/usr/bin/env python3
"""Regenerate the bundled knowledge-base fixture under src/cohortq/data/.

The fixture is a self-contained miniature of a clinical terminology
service: ~300 concepts with semantic types and ICD10/SNOMED/LOINC/RXNORM
codes, an isa hierarchy rooted at a handful of broad tag concepts,
relation edges (treats / affects / contraindicated_with / has_symptom /
lab_maps_to_phenotype), and a phrase lexicon for normalization.

Core entries carry their real UMLS identifiers and codes; breadth
entries use real clinical names with plausible codes. The outputs are
committed, so running this script should be a no-op unless the tables
below change.
"""

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "cohortq" / "data"

# (cui, name, semtypes, codes, isa_parents, lexicon_phrases)
# codes: "SYSTEM:code;SYSTEM:code"; phrases: list of surface forms.

ROOTS = [
    ("C0012634", "disease", "dsyn", "", [], []),
    ("C0037088", "signs and symptoms", "fndg", "", [], []),
    ("C0022885", "laboratory procedure", "lbtr", "", [], []),
    ("C0013227", "pharmaceutical preparations", "phsu", "", [], []),
    ("C0087111", "therapeutic procedure", "topp", "", [], []),
]

CORE_CONDITIONS = [
    ("C0011849", "diabetes mellitus", "dsyn", "SNOMED:73211009", ["C0012634"],
     ["diabetes", "diabetes mellitus", "diabetic", "diabetics"]),
    ("C0011860", "type 2 diabetes mellitus", "dsyn", "ICD10:E11.9;SNOMED:44054006",
     ["C0011849"], ["type 2 diabetes", "type 2 diabetes mellitus", "t2dm"]),
    ("C0011854", "type 1 diabetes mellitus", "dsyn", "ICD10:E10.9;SNOMED:46635009",
     ["C0011849"], ["type 1 diabetes", "type 1 diabetes mellitus", "t1dm"]),
    ("C2874072", "type 2 diabetes mellitus with kidney complications", "dsyn",
     "ICD10:E11.2;SNOMED:771000119108", ["C0011860"],
     ["diabetes with kidney complications", "diabetic kidney disease"]),
    ("C0851578", "sleep disorder", "dsyn", "ICD10:G47.9;SNOMED:39898005", ["C0012634"],
     ["sleep disorder", "sleep disorders", "disturbance of sleep"]),
    ("C0013144", "drowsiness", "sosy", "ICD10:R40.0;SNOMED:271782001", ["C0851578"],
     ["drowsiness", "drowsy"]),
    ("C0037384", "snoring", "fndg", "ICD10:R06.83;SNOMED:72863001", ["C0851578"],
     ["snoring"]),
    ("C0520679", "obstructive sleep apnea", "dsyn", "ICD10:G47.33;SNOMED:78275009",
     ["C0851578"], ["sleep apnea", "obstructive sleep apnea"]),
    ("C0004096", "asthma", "dsyn", "ICD10:J45.909;SNOMED:195967001", ["C0012634"],
     ["asthma", "asthmatic"]),
    ("C0024117", "chronic obstructive pulmonary disease", "dsyn",
     "ICD10:J44.9;SNOMED:13645005", ["C0012634"],
     ["copd", "chronic obstructive pulmonary disease"]),
    ("C0032285", "pneumonia", "dsyn", "ICD10:J18.9;SNOMED:233604007", ["C0012634"],
     ["pneumonia"]),
    ("C3714514", "infection", "dsyn", "SNOMED:40733004", ["C0012634"],
     ["infection", "infections"]),
    ("C5203670", "covid-19", "dsyn", "ICD10:U07.1;SNOMED:840539006", ["C3714514"],
     ["covid-19", "covid", "sars-cov-2 infection", "coronavirus disease 2019"]),
    ("C0026769", "multiple sclerosis", "dsyn", "ICD10:G35;SNOMED:24700007", ["C0012634"],
     ["multiple sclerosis", "ms"]),
    ("C0751967", "relapsing remitting multiple sclerosis", "dsyn", "SNOMED:426373005",
     ["C0026769"], ["relapsing remitting multiple sclerosis"]),
    ("C0751964", "primary progressive multiple sclerosis", "dsyn", "SNOMED:428700003",
     ["C0026769"], ["primary progressive multiple sclerosis"]),
    ("C0751965", "secondary progressive multiple sclerosis", "dsyn", "SNOMED:425500002",
     ["C0026769"], ["secondary progressive multiple sclerosis"]),
    ("C0949766", "acute relapsing multiple sclerosis", "dsyn", "SNOMED:426429004",
     ["C0026769"], ["acute relapsing multiple sclerosis"]),
    ("C0393665", "benign multiple sclerosis", "dsyn", "SNOMED:425898005",
     ["C0026769"], ["benign multiple sclerosis"]),
    ("C1834235", "malignant multiple sclerosis", "dsyn", "SNOMED:192930001",
     ["C0026769"], []),
    ("C0026770", "multiple sclerosis of the spinal cord", "dsyn", "SNOMED:192928003",
     ["C0026769"], []),
    ("C0026771", "multiple sclerosis of the brainstem", "dsyn", "SNOMED:192929006",
     ["C0026769"], []),
    ("C2937421", "pediatric onset multiple sclerosis", "dsyn", "SNOMED:870283006",
     ["C0026769"], []),
    ("C4087432", "fulminant multiple sclerosis", "dsyn", "SNOMED:230382004",
     ["C0026769"], []),
    ("C0018790", "cardiac arrest", "dsyn", "ICD10:I46.9;SNOMED:410429000", ["C0012634"],
     ["cardiac arrest"]),
    ("C0018801", "heart failure", "dsyn", "ICD10:I50.9;SNOMED:84114007", ["C0012634"],
     ["heart failure", "congestive heart failure", "chf"]),
    ("C0027051", "myocardial infarction", "dsyn", "ICD10:I21.9;SNOMED:22298006",
     ["C0012634"], ["myocardial infarction", "heart attack", "mi"]),
    ("C0004238", "atrial fibrillation", "dsyn", "ICD10:I48.91;SNOMED:49436004",
     ["C0012634"], ["atrial fibrillation", "afib"]),
    ("C0020538", "hypertension", "dsyn", "ICD10:I10;SNOMED:38341003", ["C0012634"],
     ["hypertension", "high blood pressure", "hypertensive"]),
    ("C0038454", "stroke", "dsyn", "ICD10:I63.9;SNOMED:230690007", ["C0012634"],
     ["stroke", "cerebrovascular accident"]),
    ("C1561643", "chronic kidney disease", "dsyn", "ICD10:N18.9;SNOMED:709044004",
     ["C0012634"], ["chronic kidney disease", "ckd"]),
    ("C0028754", "obesity", "dsyn", "ICD10:E66.9;SNOMED:414916001", ["C0012634"],
     ["obesity", "obese"]),
    ("C0011570", "major depression", "dsyn", "ICD10:F32.9;SNOMED:35489007", ["C0012634"],
     ["depression", "major depression", "major depressive disorder"]),
    ("C0003467", "anxiety disorder", "dsyn", "ICD10:F41.9;SNOMED:48694002", ["C0012634"],
     ["anxiety", "anxiety disorder"]),
    ("C0019196", "hepatitis c", "dsyn", "ICD10:B18.2;SNOMED:50711007", ["C0012634"],
     ["hepatitis c", "chronic hepatitis c"]),
    ("C0010346", "crohn disease", "dsyn", "ICD10:K50.90;SNOMED:34000006", ["C0012634"],
     ["crohn disease", "crohn's disease"]),
    ("C0029925", "ovarian cancer", "dsyn", "ICD10:C56.9;SNOMED:363443007", ["C0027651"],
     ["ovarian cancer", "carcinoma of the ovary"]),
    ("C0023434", "chronic lymphocytic leukemia", "dsyn", "ICD10:C91.10;SNOMED:92814006",
     ["C0027651"], ["chronic lymphocytic leukemia", "cll"]),
    ("C0032961", "pregnancy", "dsyn", "ICD10:Z33.1;SNOMED:77386006", ["C0012634"],
     ["pregnancy", "pregnant"]),
    ("C0030920", "peptic ulcer", "dsyn", "ICD10:K27.9;SNOMED:13200003", ["C0012634"],
     ["peptic ulcer", "peptic ulcer disease"]),
    ("C0026946", "mycosis", "dsyn", "ICD10:B49;SNOMED:3218000", ["C3714514"],
     ["mycosis", "fungal infection"]),
    ("C0040034", "thrombocytopenia", "dsyn", "ICD10:D69.6;SNOMED:302215000",
     ["C0012634"], ["thrombocytopenia", "low platelet count"]),
    ("C0002871", "anemia", "dsyn", "ICD10:D64.9;SNOMED:271737000", ["C0012634"],
     ["anemia", "anaemia"]),
    ("C0020456", "hyperglycemia", "dsyn", "ICD10:R73.9;SNOMED:80394007", ["C0012634"],
     ["hyperglycemia"]),
    ("C0009421", "coma", "sosy", "ICD10:R40.20;SNOMED:371632003", ["C0037088"],
     ["coma", "comatose"]),
    ("C0021400", "influenza", "dsyn", "ICD10:J11.1;SNOMED:6142004", ["C3714514"],
     ["influenza", "flu"]),
    ("C0020473", "hyperlipidemia", "dsyn", "ICD10:E78.5;SNOMED:55822004", ["C0012634"],
     ["hyperlipidemia", "high cholesterol"]),
]

SYMPTOMS = [
    ("C0015967", "fever", "sosy", "ICD10:R50.9;SNOMED:386661006", ["C0037088"],
     ["fever", "pyrexia", "febrile"]),
    ("C0010200", "cough", "sosy", "ICD10:R05;SNOMED:49727002", ["C0037088"],
     ["cough", "coughing"]),
    ("C0013404", "dyspnea", "sosy", "ICD10:R06.0;SNOMED:267036007", ["C0037088"],
     ["dyspnea", "shortness of breath"]),
    ("C0015672", "fatigue", "sosy", "ICD10:R53.83;SNOMED:84229001", ["C0037088"],
     ["fatigue", "tiredness"]),
    ("C0008031", "chest pain", "sosy", "ICD10:R07.9;SNOMED:29857009", ["C0037088"],
     ["chest pain"]),
    ("C0018681", "headache", "sosy", "ICD10:R51;SNOMED:25064002", ["C0037088"],
     ["headache"]),
    ("C0027497", "nausea", "sosy", "ICD10:R11.0;SNOMED:422587007", ["C0037088"],
     ["nausea"]),
    ("C0037369", "smoking", "fndg", "ICD10:Z72.0;SNOMED:77176002", ["C0037088"],
     ["smoke", "smokes", "smoking", "tobacco use", "smoker"]),
    ("C1305855", "body mass index", "fndg", "LOINC:39156-5", ["C0037088"],
     ["bmi", "body mass index"]),
]

# the chemical homonym of "BMI": kept code-free and typed as a chemical so
# the semantic-type filter has something real to remove
CHEMICALS = [
    ("C0910133", "bmi compound", "orch", "", [], ["bmi"]),
]

PHYS_FUNCTIONS = [
    ("C0035203", "respiratory function", "phsf", "", [], ["respiratory function", "lung function"]),
    ("C0232164", "cardiac function", "phsf", "", [], ["cardiac function", "heart function"]),
    ("C0232804", "renal function", "phsf", "", [], ["renal function", "kidney function"]),
    ("C0232741", "hepatic function", "phsf", "", [], ["hepatic function", "liver function"]),
]

CORE_LABS = [
    ("C0032181", "platelet count measurement", "lbtr", "", ["C0022885"],
     ["platelet count", "platelets"]),
    ("C0362994", "platelet # blood auto", "lbtr", "LOINC:777-3", ["C0022885"],
     ["platelet count", "platelet # blood auto", "platelet number"]),
    ("C0201976", "serum creatinine measurement", "lbtr", "LOINC:2160-0", ["C0022885"],
     ["serum creatinine", "creatinine"]),
    ("C0201657", "creatinine clearance measurement", "lbtr", "", ["C0022885"],
     ["creatinine clearance"]),
    ("C0023508", "white blood cell count", "lbtr", "LOINC:6690-2", ["C0022885"],
     ["white blood cell count", "wbc", "leukocyte count"]),
    ("C0019046", "hemoglobin measurement", "lbtr", "LOINC:718-7", ["C0022885"],
     ["hemoglobin", "hgb"]),
    ("C0337438", "glucose measurement serum", "lbtr", "LOINC:2345-7", ["C0022885"],
     ["glucose", "serum glucose", "blood glucose"]),
    ("C0037473", "sodium measurement", "lbtr", "LOINC:2951-2", ["C0022885"],
     ["sodium", "serum sodium"]),
    ("C0201836", "alanine aminotransferase measurement", "lbtr", "LOINC:1742-6",
     ["C0022885"], ["alanine aminotransferase", "alt"]),
    ("C0201913", "total bilirubin measurement", "lbtr", "LOINC:1975-2", ["C0022885"],
     ["total bilirubin", "bilirubin"]),
    ("C0005903", "body temperature", "lbtr", "LOINC:8310-5", ["C0022885"],
     ["body temperature", "temperature", "cooled"]),
    ("C0202054", "hemoglobin a1c measurement", "lbtr", "LOINC:4548-4", ["C0022885"],
     ["hemoglobin a1c", "hba1c", "a1c"]),
    ("C1278039", "estimated glomerular filtration rate", "lbtr", "LOINC:33914-3",
     ["C0022885"], ["estimated glomerular filtration rate", "egfr"]),
]

CORE_DRUGS = [
    ("C0025598", "metformin", "phsu", "RXNORM:6809", ["C0013227"], ["metformin"]),
    ("C0021641", "insulin", "phsu", "RXNORM:5856", ["C0013227"], ["insulin"]),
    ("C0004057", "aspirin", "phsu", "RXNORM:1191", ["C0013227"], ["aspirin"]),
    ("C0043031", "warfarin", "phsu", "RXNORM:11289", ["C0013227"], ["warfarin"]),
    ("C4044947", "ocrelizumab", "phsu", "RXNORM:1876366", ["C0013227"], ["ocrelizumab"]),
    ("C0032952", "prednisone", "phsu", "RXNORM:8640", ["C0013227"], ["prednisone"]),
    ("C0001927", "albuterol", "phsu", "RXNORM:435", ["C0013227"], ["albuterol"]),
    ("C0025815", "methylprednisolone", "phsu", "RXNORM:6902", ["C0013227"],
     ["methylprednisolone"]),
    ("C0065374", "lisinopril", "phsu", "RXNORM:29046", ["C0013227"], ["lisinopril"]),
    ("C0286651", "atorvastatin", "phsu", "RXNORM:83367", ["C0013227"], ["atorvastatin"]),
    ("C0244713", "interferon beta-1a", "phsu", "RXNORM:153326", ["C0013227"],
     ["interferon beta-1a", "interferon beta"]),
    ("C0030842", "penicillin", "phsu", "RXNORM:7980", ["C0013227"], ["penicillin"]),
]

CORE_PROCEDURES = [
    ("C0011946", "dialysis", "topp", "SNOMED:108241001", ["C0087111"],
     ["dialysis", "hemodialysis"]),
    ("C0009378", "colonoscopy", "topp", "SNOMED:73761001", ["C0087111"], ["colonoscopy"]),
    ("C0003611", "appendectomy", "topp", "SNOMED:80146002", ["C0087111"], ["appendectomy"]),
    ("C0010055", "coronary artery bypass", "topp", "SNOMED:232717009", ["C0087111"],
     ["coronary artery bypass", "cabg", "bypass surgery"]),
    ("C0199470", "mechanical ventilation", "topp", "SNOMED:40617009", ["C0087111"],
     ["mechanical ventilation", "ventilator support"]),
    ("C0013216", "chemotherapy", "topp", "SNOMED:367336001", ["C0087111"],
     ["chemotherapy"]),
    ("C0040732", "organ transplant", "topp", "SNOMED:77465005", ["C0087111"],
     ["organ transplant", "transplantation"]),
    ("C0203597", "therapeutic cooling", "topp", "SNOMED:308693000", ["C0087111"],
     ["therapeutic cooling", "induced hypothermia"]),
]

# breadth: real clinical names, plausible codes, one lexicon phrase each
NEOPLASM_PARENT = [
    ("C0027651", "malignant neoplasm", "dsyn", "ICD10:C80.1;SNOMED:363346000",
     ["C0012634"], ["cancer", "malignancy", "malignant neoplasm"]),
]

BREADTH_CONDITIONS = [
    ("lung cancer", "C34.90", "254637007", "C0027651"),
    ("breast cancer", "C50.919", "254837009", "C0027651"),
    ("colon cancer", "C18.9", "363406005", "C0027651"),
    ("prostate cancer", "C61", "399068003", "C0027651"),
    ("pancreatic cancer", "C25.9", "363418001", "C0027651"),
    ("gastric cancer", "C16.9", "363349007", "C0027651"),
    ("bladder cancer", "C67.9", "399326009", "C0027651"),
    ("renal cell carcinoma", "C64.9", "702391001", "C0027651"),
    ("melanoma", "C43.9", "372244006", "C0027651"),
    ("hodgkin lymphoma", "C81.90", "118599009", "C0027651"),
    ("non-hodgkin lymphoma", "C85.80", "118601006", "C0027651"),
    ("tuberculosis", "A15.0", "56717001", "C3714514"),
    ("hiv infection", "B20", "86406008", "C3714514"),
    ("hepatitis a", "B15.9", "40468003", "C3714514"),
    ("hepatitis b", "B18.1", "66071002", "C3714514"),
    ("sepsis", "A41.9", "91302008", "C3714514"),
    ("urinary tract infection", "N39.0", "68566005", "C3714514"),
    ("cellulitis", "L03.90", "385627004", "C3714514"),
    ("parkinson disease", "G20", "49049000", "C0012634"),
    ("alzheimer disease", "G30.9", "26929004", "C0012634"),
    ("epilepsy", "G40.909", "84757009", "C0012634"),
    ("migraine", "G43.909", "37796009", "C0012634"),
    ("peripheral neuropathy", "G62.9", "302226006", "C0012634"),
    ("hypothyroidism", "E03.9", "40930008", "C0012634"),
    ("hyperthyroidism", "E05.90", "34486009", "C0012634"),
    ("cushing syndrome", "E24.9", "47270006", "C0012634"),
    ("addison disease", "E27.1", "363732003", "C0012634"),
    ("ulcerative colitis", "K51.90", "64766004", "C0012634"),
    ("irritable bowel syndrome", "K58.9", "10743008", "C0012634"),
    ("gastroesophageal reflux disease", "K21.9", "235595009", "C0012634"),
    ("cirrhosis of liver", "K74.60", "19943007", "C0012634"),
    ("acute pancreatitis", "K85.90", "197456007", "C0012634"),
    ("acute kidney injury", "N17.9", "14669001", "C0012634"),
    ("nephrotic syndrome", "N04.9", "52254009", "C0012634"),
    ("kidney stone", "N20.0", "95570007", "C0012634"),
    ("bipolar disorder", "F31.9", "13746004", "C0012634"),
    ("schizophrenia", "F20.9", "58214004", "C0012634"),
    ("post-traumatic stress disorder", "F43.10", "47505003", "C0012634"),
    ("attention deficit hyperactivity disorder", "F90.9", "406506008", "C0012634"),
    ("rheumatoid arthritis", "M06.9", "69896004", "C0012634"),
    ("osteoarthritis", "M19.90", "396275006", "C0012634"),
    ("osteoporosis", "M81.0", "64859006", "C0012634"),
    ("gout", "M10.9", "90560007", "C0012634"),
    ("systemic lupus erythematosus", "M32.9", "55464009", "C0012634"),
    ("acute bronchitis", "J40", "10509002", "C0012634"),
    ("pulmonary embolism", "I26.99", "59282003", "C0012634"),
    ("pulmonary fibrosis", "J84.10", "51615001", "C0012634"),
    ("deep vein thrombosis", "I82.40", "128053003", "C0012634"),
    ("hemophilia", "D66", "90935002", "C0012634"),
    ("sickle cell disease", "D57.1", "417357006", "C0012634"),
    ("psoriasis", "L40.9", "9014002", "C0012634"),
    ("atopic dermatitis", "L20.9", "24079001", "C0012634"),
    ("glaucoma", "H40.9", "23986001", "C0012634"),
    ("cataract", "H26.9", "193570009", "C0012634"),
    ("macular degeneration", "H35.30", "267718000", "C0012634"),
    ("endometriosis", "N80.9", "129103003", "C0012634"),
    ("polycystic ovary syndrome", "E28.2", "237055002", "C0012634"),
    ("celiac disease", "K90.0", "396331005", "C0012634"),
    ("diverticulitis", "K57.92", "307496006", "C0012634"),
    ("pericarditis", "I30.9", "3238004", "C0012634"),
    ("myocarditis", "I40.9", "50920009", "C0012634"),
    ("endocarditis", "I38", "56819008", "C0012634"),
    ("aortic stenosis", "I35.0", "60573004", "C0012634"),
    ("mitral regurgitation", "I34.0", "48724000", "C0012634"),
    ("cardiomyopathy", "I42.9", "85898001", "C0012634"),
    ("peripheral artery disease", "I73.9", "399957001", "C0012634"),
    ("aneurysm of abdominal aorta", "I71.4", "233985008", "C0012634"),
    ("pulmonary hypertension", "I27.20", "70995007", "C0012634"),
    ("interstitial lung disease", "J84.9", "233703007", "C0012634"),
    ("bronchiectasis", "J47.9", "12295008", "C0012634"),
    ("cystic fibrosis", "E84.9", "190905008", "C0012634"),
    ("sarcoidosis", "D86.9", "31541009", "C0012634"),
    ("amyloidosis", "E85.9", "17602002", "C0012634"),
    ("scleroderma", "M34.9", "89155008", "C0012634"),
    ("sjogren syndrome", "M35.00", "83901003", "C0012634"),
    ("vasculitis", "I77.6", "31996006", "C0012634"),
    ("myasthenia gravis", "G70.00", "91637004", "C0012634"),
    ("guillain-barre syndrome", "G61.0", "40956001", "C0012634"),
    ("huntington disease", "G10", "58756001", "C0012634"),
    ("amyotrophic lateral sclerosis", "G12.21", "86044005", "C0012634"),
    ("restless legs syndrome", "G25.81", "32914008", "C0851578"),
    ("narcolepsy", "G47.419", "60380001", "C0851578"),
    ("insomnia", "G47.00", "193462001", "C0851578"),
    ("allergic rhinitis", "J30.9", "61582004", "C0012634"),
    ("chronic sinusitis", "J32.9", "40055000", "C0012634"),
    ("otitis media", "H66.90", "65363002", "C0012634"),
    ("meniere disease", "H81.09", "13445001", "C0012634"),
    ("tinnitus", "H93.19", "60862001", "C0012634"),
    ("vertigo", "R42", "399153001", "C0012634"),
    ("syncope", "R55", "271594007", "C0012634"),
    ("seizure disorder", "R56.9", "91175000", "C0012634"),
    ("transient ischemic attack", "G45.9", "266257000", "C0012634"),
    ("subarachnoid hemorrhage", "I60.9", "21454007", "C0012634"),
    ("subdural hematoma", "I62.00", "95453001", "C0012634"),
    ("traumatic brain injury", "S06.9", "127295002", "C0012634"),
    ("spinal stenosis", "M48.00", "76107001", "C0012634"),
    ("herniated disc", "M51.26", "404684003", "C0012634"),
    ("scoliosis", "M41.9", "298382003", "C0012634"),
    ("fibromyalgia", "M79.7", "203082005", "C0012634"),
    ("polymyalgia rheumatica", "M35.3", "65323003", "C0012634"),
    ("ankylosing spondylitis", "M45.9", "9631008", "C0012634"),
    ("psoriatic arthritis", "L40.50", "33339001", "C0012634"),
    ("carpal tunnel syndrome", "G56.00", "57406009", "C0012634"),
    ("plantar fasciitis", "M72.2", "202882003", "C0012634"),
    ("rotator cuff tear", "M75.100", "202856009", "C0012634"),
    ("hip fracture", "S72.90", "5913000", "C0012634"),
    ("vertebral compression fracture", "M80.08", "207957008", "C0012634"),
    ("barrett esophagus", "K22.70", "302914006", "C0012634"),
    ("esophageal varices", "I85.00", "28670008", "C0012634"),
    ("gastritis", "K29.70", "4556007", "C0012634"),
    ("gallstones", "K80.20", "266474003", "C0012634"),
    ("hemorrhoids", "K64.9", "70153002", "C0012634"),
    ("anal fissure", "K60.2", "30037006", "C0012634"),
    ("fatty liver disease", "K76.0", "197321007", "C0012634"),
    ("autoimmune hepatitis", "K75.4", "408335007", "C0012634"),
    ("primary biliary cholangitis", "K74.3", "31712002", "C0012634"),
    ("benign prostatic hyperplasia", "N40.0", "266569009", "C0012634"),
    ("erectile dysfunction", "N52.9", "860914002", "C0012634"),
    ("urinary incontinence", "R32", "165232002", "C0012634"),
    ("interstitial cystitis", "N30.10", "197853004", "C0012634"),
    ("uterine fibroids", "D25.9", "95315005", "C0012634"),
    ("menopause", "N95.1", "161712005", "C0012634"),
    ("preeclampsia", "O14.90", "398254007", "C0012634"),
    ("gestational diabetes", "O24.419", "11687002", "C0011849"),
    ("hypoglycemia", "E16.2", "302866003", "C0012634"),
    ("metabolic syndrome", "E88.81", "237602007", "C0012634"),
    ("vitamin d deficiency", "E55.9", "34713006", "C0012634"),
    ("iron deficiency anemia", "D50.9", "87522002", "C0002871"),
    ("aplastic anemia", "D61.9", "306058006", "C0002871"),
    ("hemolytic anemia", "D59.9", "61261009", "C0002871"),
    ("polycythemia vera", "D45", "109992005", "C0012634"),
    ("essential thrombocythemia", "D47.3", "109994006", "C0012634"),
    ("myelodysplastic syndrome", "D46.9", "109995007", "C0012634"),
    ("neutropenia", "D70.9", "165517008", "C0012634"),
    ("lymphedema", "I89.0", "234097001", "C0012634"),
    ("raynaud phenomenon", "I73.00", "266261006", "C0012634"),
]

BREADTH_DRUGS = [
    ("omeprazole", "7646"), ("amoxicillin", "723"), ("azithromycin", "18631"),
    ("levothyroxine", "10582"), ("amlodipine", "17767"), ("gabapentin", "25480"),
    ("sertraline", "36437"), ("fluoxetine", "4493"), ("losartan", "52175"),
    ("furosemide", "4603"), ("spironolactone", "9997"), ("clopidogrel", "32968"),
    ("apixaban", "1364430"), ("rivaroxaban", "1114195"), ("simvastatin", "36567"),
    ("hydrochlorothiazide", "5487"), ("ibuprofen", "5640"), ("acetaminophen", "161"),
    ("morphine", "7052"), ("oxycodone", "7804"), ("tramadol", "10689"),
    ("ceftriaxone", "2193"), ("vancomycin", "11124"), ("cisplatin", "2555"),
    ("paclitaxel", "56946"), ("rituximab", "121191"), ("adalimumab", "327361"),
    ("infliximab", "5992"), ("methotrexate", "6851"), ("doxycycline", "3640"),
]

BREADTH_LABS = [
    ("potassium measurement", "2823-3"), ("chloride measurement", "2075-0"),
    ("calcium measurement", "17861-6"), ("albumin measurement", "1751-7"),
    ("aspartate aminotransferase measurement", "1920-8"),
    ("alkaline phosphatase measurement", "6768-6"),
    ("thyroid stimulating hormone measurement", "3016-3"),
    ("ldl cholesterol measurement", "13457-7"), ("hdl cholesterol measurement", "2085-9"),
    ("triglycerides measurement", "2571-8"), ("inr measurement", "6301-6"),
    ("troponin i measurement", "10839-9"),
    ("b-type natriuretic peptide measurement", "30934-4"),
    ("c-reactive protein measurement", "1988-5"),
    ("erythrocyte sedimentation rate", "4537-7"), ("ferritin measurement", "2276-4"),
    ("vitamin d measurement", "1989-3"), ("urine protein measurement", "2888-6"),
    ("lactate measurement", "2524-7"), ("uric acid measurement", "3084-1"),
]

BREADTH_PROCEDURES = [
    ("hip replacement", "52734007"), ("knee replacement", "609588000"),
    ("cholecystectomy", "38102005"), ("hysterectomy", "236886002"),
    ("mastectomy", "69031006"), ("percutaneous coronary intervention", "415070008"),
    ("pacemaker insertion", "23852006"), ("upper gastrointestinal endoscopy", "423827005"),
    ("bronchoscopy", "10847001"), ("lumbar puncture", "277762005"),
    ("blood transfusion", "116859006"), ("radiation therapy", "108290001"),
    ("bariatric surgery", "18692006"), ("tonsillectomy", "173422009"),
    ("thyroidectomy", "13619001"),
]

RELATIONS = [
    # drug treats condition
    ("C0025815", "treats", "C0004096"),      # methylprednisolone -> asthma
    ("C0001927", "treats", "C0004096"),      # albuterol -> asthma
    ("C0032952", "treats", "C0004096"),      # prednisone -> asthma
    ("C0032952", "treats", "C0010346"),      # prednisone -> crohn
    ("C0025598", "treats", "C0011860"),      # metformin -> t2dm
    ("C0021641", "treats", "C0011854"),      # insulin -> t1dm
    ("C0021641", "treats", "C0011860"),      # insulin -> t2dm
    ("C4044947", "treats", "C0026769"),      # ocrelizumab -> ms
    ("C0244713", "treats", "C0026769"),      # interferon beta -> ms
    ("C0043031", "treats", "C0004238"),      # warfarin -> afib
    ("C0004057", "treats", "C0027051"),      # aspirin -> mi
    ("C0065374", "treats", "C0020538"),      # lisinopril -> hypertension
    ("C0065374", "treats", "C0018801"),      # lisinopril -> heart failure
    ("C0286651", "treats", "C0020473"),      # atorvastatin -> hyperlipidemia
    # condition affects physiologic function
    ("C0004096", "affects", "C0035203"),     # asthma -> respiratory function
    ("C0024117", "affects", "C0035203"),     # copd -> respiratory function
    ("C0032285", "affects", "C0035203"),     # pneumonia -> respiratory function
    ("C5203670", "affects", "C0035203"),     # covid -> respiratory function
    ("C0018801", "affects", "C0232164"),     # heart failure -> cardiac function
    ("C0004238", "affects", "C0232164"),     # afib -> cardiac function
    ("C0027051", "affects", "C0232164"),     # mi -> cardiac function
    ("C1561643", "affects", "C0232804"),     # ckd -> renal function
    ("C0019196", "affects", "C0232741"),     # hepatitis c -> hepatic function
    # condition is a contraindication to drug
    ("C0026946", "contraindicated_with", "C0025815"),  # mycosis -> methylprednisolone
    ("C0032961", "contraindicated_with", "C0043031"),  # pregnancy -> warfarin
    ("C0030920", "contraindicated_with", "C0004057"),  # peptic ulcer -> aspirin
    ("C0030920", "contraindicated_with", "C0032952"),  # peptic ulcer -> prednisone
    ("C1561643", "contraindicated_with", "C0025598"),  # ckd -> metformin
    # condition has symptom
    ("C5203670", "has_symptom", "C0015967"),
    ("C5203670", "has_symptom", "C0010200"),
    ("C5203670", "has_symptom", "C0013404"),
    ("C0032285", "has_symptom", "C0015967"),
    ("C0032285", "has_symptom", "C0010200"),
    ("C0004096", "has_symptom", "C0010200"),
    ("C0004096", "has_symptom", "C0013404"),
    ("C0018801", "has_symptom", "C0013404"),
    ("C0018801", "has_symptom", "C0015672"),
    ("C0027051", "has_symptom", "C0008031"),
    ("C0027051", "has_symptom", "C0013404"),
    ("C0021400", "has_symptom", "C0015967"),
    ("C0021400", "has_symptom", "C0018681"),
    ("C0021400", "has_symptom", "C0015672"),
    ("C0002871", "has_symptom", "C0015672"),
    # lab result maps to phenotype
    ("C0362994", "lab_maps_to_phenotype", "C0040034", "low"),   # platelets low -> thrombocytopenia
    ("C0019046", "lab_maps_to_phenotype", "C0002871", "low"),   # hemoglobin low -> anemia
    ("C0337438", "lab_maps_to_phenotype", "C0020456", "high"),  # glucose high -> hyperglycemia
    ("C0201976", "lab_maps_to_phenotype", "C1561643", "high"),  # creatinine high -> ckd
    ("C0202054", "lab_maps_to_phenotype", "C0011849", "high"),  # hba1c high -> diabetes
]


def _breadth_cui(prefix: str, i: int) -> str:
    return f"C9{prefix}{i:04d}"


def build_tables():
    concepts = []
    lexicon = []
    triples = []

    def add(cui, name, semtypes, codes, parents, phrases):
        concepts.append((cui, name, semtypes, codes))
        for p in parents:
            triples.append((cui, "isa", p))
        for phrase in phrases:
            lexicon.append((phrase, cui, semtypes))

    core = (ROOTS + CORE_CONDITIONS + SYMPTOMS + CHEMICALS + PHYS_FUNCTIONS
            + CORE_LABS + CORE_DRUGS + CORE_PROCEDURES + NEOPLASM_PARENT)
    for row in core:
        add(*row)

    for i, (name, icd10, snomed, parent) in enumerate(BREADTH_CONDITIONS):
        add(_breadth_cui("1", i), name, "dsyn", f"ICD10:{icd10};SNOMED:{snomed}",
            [parent], [name])
    for i, (name, rxcui) in enumerate(BREADTH_DRUGS):
        add(_breadth_cui("2", i), name, "phsu", f"RXNORM:{rxcui}", ["C0013227"], [name])
    for i, (name, loinc) in enumerate(BREADTH_LABS):
        add(_breadth_cui("3", i), name, "lbtr", f"LOINC:{loinc}", ["C0022885"], [name])
    for i, (name, snomed) in enumerate(BREADTH_PROCEDURES):
        add(_breadth_cui("4", i), name, "topp", f"SNOMED:{snomed}", ["C0087111"], [name])

    for rel in RELATIONS:
        triples.append(rel)
    return concepts, triples, lexicon


def write_files():
    concepts, triples, lexicon = build_tables()
    cuis = {c[0] for c in concepts}
    for t in triples:
        assert t[0] in cuis and t[2] in cuis, f"dangling edge {t}"

    header = "# generated by tools/build_fixture.py; edit that script, not this file\n"
    with open(DATA_DIR / "concepts.tsv", "w", encoding="utf-8") as fh:
        fh.write(header + "# cui\tname\tsemtypes\tcodes\n")
        for cui, name, semtypes, codes in concepts:
            fh.write(f"{cui}\t{name}\t{semtypes}\t{codes}\n")
    with open(DATA_DIR / "triples.tsv", "w", encoding="utf-8") as fh:
        fh.write(header + "# subject\tpredicate\tobject\t[qualifier]\n")
        for t in triples:
            fh.write("\t".join(t) + "\n")
    with open(DATA_DIR / "lexicon.tsv", "w", encoding="utf-8") as fh:
        fh.write(header + "# phrase\tcui\tsemtypes\n")
        for phrase, cui, semtypes in lexicon:
            fh.write(f"{phrase}\t{cui}\t{semtypes}\n")
    print(f"wrote {len(concepts)} concepts, {len(triples)} triples, "
          f"{len(lexicon)} lexicon entries to {DATA_DIR}")


# ---------------------------------------------------------------------------
# mapping documents, demo trials, annotation corpus samples

TRIALS = {
    "diabetes_elderly": {
        "name": "diabetes_elderly",
        "description": "Elderly patients with poorly controlled type 2 "
                       "diabetes and intact kidney function.",
        "pin_date": "2020-12-31",
        "input_mode": "logical_form",
        "inclusion": [
            'intersect(cond("Diabetic"), union(female(), male()), '
            'age().num_filter(eq(op(GT), val("65"))))',
            'lab("hba1c").num_filter(eq(op(GT), val("6.5")), unit("%"))',
        ],
        "exclusion": [
            'cond("chronic kidney disease")',
        ],
    },
    "hypothermia_cardiac_arrest": {
        "name": "hypothermia_cardiac_arrest",
        "description": "Adults cooled below 34 degrees within 240 minutes "
                       "of a cardiac arrest.",
        "pin_date": "2020-12-31",
        "input_mode": "logical_form",
        "inclusion": [
            'age().num_filter(eq(op(GTEQ), val("18")))',
            'lab("body temperature").num_filter(eq(op(LT), val("34")))'
            '.within(cond("cardiac arrest"), val("240"), unit("minutes"))',
        ],
        "exclusion": [],
    },
    "ms_treatment_naive": {
        "name": "ms_treatment_naive",
        "description": "Working-age multiple sclerosis patients with no "
                       "prior ocrelizumab exposure.",
        "pin_date": "2020-12-31",
        "input_mode": "logical_form",
        "inclusion": [
            'cond("multiple sclerosis")',
            'age().num_filter(eq(op(GTEQ), val("18")), eq(op(LTEQ), val("65")))',
        ],
        "exclusion": [
            'drug("ocrelizumab")',
        ],
    },
    "six_line_recall": {
        "name": "six_line_recall",
        "description": "Six-line demo trial for the per-line recall "
                       "analysis; the resuscitation line is expected to be "
                       "skipped (no lab mapping).",
        "pin_date": "2020-12-31",
        "input_mode": "logical_form",
        "inclusion": [
            'cond("diabetes")',
            'union(female(), male())',
            'lab("resuscitation")',
            'lab("hba1c").num_filter(eq(op(GT), val("7")))',
            'age().num_filter(eq(op(GT), val("50")))',
        ],
        "exclusion": [
            'cond("chronic kidney disease")',
        ],
    },
}

CORPUS = {
    "diabetic_women_over_65": (
        "INC",
        "Diabetic women and men over age 65",
        'cond("Diabetic") women and men over age 65',
        'intersect(\n'
        '    cond("Diabetic"),\n'
        '    union(female(), male()),\n'
        '    age().num_filter(eq(op(GT), val("65")))\n'
        ')',
    ),
    "smoker": (
        "INC",
        "Patients who smoke",
        'Patients who obs("smoke")',
        'obs("smoke")',
    ),
    "no_history_ckd": (
        "INC",
        "No history of chronic kidney disease",
        'No history of cond("chronic kidney disease")',
        'not(cond("chronic kidney disease"))',
    ),
    "serum_creatinine": (
        "INC",
        "Serum creatinine =< 2 mg/dL",
        'lab("Serum creatinine") =< 2 mg/dL',
        'lab("Serum creatinine").num_filter(eq(op(LTEQ), val("2")), '
        'unit("mg/dL"))',
    ),
    "cooled_within_240": (
        "INC",
        "Cooled to < 34 deg C within 240 minutes of cardiac arrest",
        'lab("Cooled") to < 34 deg C within 240 minutes of '
        'cond("cardiac arrest")',
        'lab("Cooled").num_filter(eq(op(LT), val("34")))'
        '.within(cond("cardiac arrest"), val("240"), unit("minutes"))',
    ),
    "investigator_opinion": (
        "EXC",
        "In the opinion of investigators, unlikely to complete the protocol",
        "In the opinion of investigators, unlikely to complete the protocol",
        None,
    ),
}


def write_documents():
    import json
    import sys

    sys.path.insert(0, str(DATA_DIR.parents[1]))
    from cohortq import fixture

    smm_dir = DATA_DIR / "smm"
    smm_dir.mkdir(exist_ok=True)
    for doc in (fixture.tall_smm_doc(), fixture.pivoted_smm_doc()):
        with open(smm_dir / f"{doc['name']}.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    trials_dir = DATA_DIR / "trials"
    trials_dir.mkdir(exist_ok=True)
    for name, doc in TRIALS.items():
        with open(trials_dir / f"{name}.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    corpus_dir = DATA_DIR / "corpus"
    corpus_dir.mkdir(exist_ok=True)
    for name, (polarity, raw, augmented, lf_text) in CORPUS.items():
        lines = [polarity, "", raw, "", augmented, ""]
        if lf_text is not None:
            lines.append(lf_text)
        with open(corpus_dir / f"{name}.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(TRIALS)} trials, {len(CORPUS)} corpus samples, "
          f"2 mapping documents")


if __name__ == "__main__":
    write_files()
    write_documents()
