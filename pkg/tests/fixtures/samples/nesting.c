void function(int n) {
    for (int i = 0; i < 8; i++) {
        int m[64];
        for (int j = 0; j < 8; j++) {
            m[i * 8 + j] = i - j;
        }
    }
}
