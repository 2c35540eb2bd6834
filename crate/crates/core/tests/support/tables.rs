/// Top ten by published index, short names as printed.
pub const TABLE_TOP: [(&str, f64); 10] = [
    ("Anadolu", 0.449508),
    ("İstanbul", 0.444084),
    ("Gazi", 0.443798),
    ("Bilkent", 0.431946),
    ("Sakarya", 0.42942),
    ("Boğaziçi", 0.428301),
    ("Hacettepe", 0.411034),
    ("Ankara", 0.398226),
    ("Yıldız Teknik", 0.397495),
    ("Dokuz Eylül", 0.386229),
];

/// Bottom ten, lowest first.
pub const TABLE_BOTTOM: [(&str, f64); 10] = [
    ("Deniz Harp Okulu", 0.150473),
    ("Kara Harp Okulu", 0.151046),
    ("Karatay", 0.188876),
    ("Ankara Bilge", 0.19034),
    ("Karabük", 0.196542),
    ("Tunceli", 0.197094),
    ("Şırnak", 0.197622),
    ("K. Mehmetbey", 0.198129),
    ("Avrasya", 0.200475),
    ("Ağrı İ. Çeçen", 0.205266),
];
